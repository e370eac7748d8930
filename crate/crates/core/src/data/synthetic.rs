//! Seeded generator of NSL-KDD-formatted records for tests, benchmarks and
//! demos. Each attack family gets a characteristic feature signature (e.g.
//! SYN-error rates for DoS, host-diversity rates for Probe) on top of noise,
//! and most counters are zero, as in the real capture.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AttackClass;

/// Class shares of the NSL-KDD training file, Normal first.
const SHARES: [(AttackClass, f64); 5] = [
    (AttackClass::Normal, 0.5346),
    (AttackClass::DoS, 0.3646),
    (AttackClass::Probe, 0.0925),
    (AttackClass::R2L, 0.0079),
    (AttackClass::U2R, 0.0004),
];

const SERVICES: [&str; 8] = ["http", "private", "ftp_data", "smtp", "domain_u", "telnet", "ecr_i", "other"];

fn labels(class: AttackClass) -> &'static [&'static str] {
    match class {
        AttackClass::Normal => &["normal"],
        AttackClass::DoS => &["neptune", "smurf", "back", "teardrop"],
        AttackClass::Probe => &["satan", "ipsweep", "portsweep", "nmap"],
        AttackClass::R2L => &["warezclient", "guess_passwd", "ftp_write"],
        AttackClass::U2R => &["buffer_overflow", "rootkit"],
    }
}

fn pick_class(rng: &mut ChaCha8Rng) -> AttackClass {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (class, share) in SHARES {
        acc += share;
        if u < acc {
            return class;
        }
    }
    AttackClass::Normal
}

fn rate(rng: &mut ChaCha8Rng, centre: f64) -> f64 {
    let v: f64 = centre + rng.random_range(-0.08..0.08);
    (v.clamp(0.0, 1.0) * 100.0).round() / 100.0
}

/// One record line (43 comma-separated fields) for `class`.
pub fn synthetic_line(class: AttackClass, rng: &mut ChaCha8Rng) -> String {
    use AttackClass::*;
    let mut f = [0.0f64; 41];
    let (protocol, service, flag) = match class {
        Normal => (["tcp", "udp"][rng.random_range(0..2)], SERVICES[rng.random_range(0..5)], "SF"),
        DoS => (["tcp", "icmp"][rng.random_range(0..2)], ["private", "ecr_i", "http"][rng.random_range(0..3)], ["S0", "SF", "REJ"][rng.random_range(0..3)]),
        Probe => (["tcp", "icmp", "udp"][rng.random_range(0..3)], ["private", "other", "ecr_i"][rng.random_range(0..3)], ["REJ", "SF", "RSTO"][rng.random_range(0..3)]),
        R2L => ("tcp", ["ftp_data", "telnet", "ftp_data"][rng.random_range(0..3)], ["SF", "RSTO"][rng.random_range(0..2)]),
        U2R => ("tcp", ["telnet", "ftp_data"][rng.random_range(0..2)], "SF"),
    };
    let noisy = rng.random_bool(0.03);
    match class {
        Normal => {
            f[4] = rng.random_range(100..3000) as f64;
            f[5] = rng.random_range(0..20000) as f64;
            f[11] = 1.0;
            f[22] = rng.random_range(1..20) as f64;
            f[23] = rng.random_range(1..25) as f64;
            f[28] = rate(rng, 0.95);
            f[31] = rng.random_range(10..255) as f64;
            f[32] = rng.random_range(100..255) as f64;
            f[33] = rate(rng, 0.9);
            f[35] = rate(rng, 0.1);
        }
        DoS => {
            f[22] = rng.random_range(100..511) as f64;
            f[23] = rng.random_range(1..30) as f64;
            f[24] = rate(rng, 0.95);
            f[25] = rate(rng, 0.95);
            f[28] = rate(rng, 0.05);
            f[29] = rate(rng, 0.07);
            f[31] = 255.0;
            f[32] = rng.random_range(1..30) as f64;
            f[33] = rate(rng, 0.08);
            f[34] = rate(rng, 0.07);
            f[37] = rate(rng, 0.95);
            f[38] = rate(rng, 0.95);
        }
        Probe => {
            f[0] = rng.random_range(0..5) as f64;
            f[22] = rng.random_range(1..200) as f64;
            f[23] = rng.random_range(1..10) as f64;
            f[26] = rate(rng, 0.6);
            f[27] = rate(rng, 0.6);
            f[29] = rate(rng, 0.8);
            f[30] = rate(rng, 0.3);
            f[31] = rng.random_range(1..255) as f64;
            f[32] = rng.random_range(1..10) as f64;
            f[34] = rate(rng, 0.7);
            f[35] = rate(rng, 0.8);
            f[39] = rate(rng, 0.6);
            f[40] = rate(rng, 0.6);
        }
        R2L => {
            f[0] = rng.random_range(0..3000) as f64;
            f[4] = rng.random_range(200..300000) as f64;
            f[9] = rng.random_range(0..5) as f64;
            f[10] = rng.random_range(0..4) as f64;
            f[11] = 1.0;
            f[21] = if rng.random_bool(0.6) { 1.0 } else { 0.0 };
            f[22] = rng.random_range(1..5) as f64;
            f[23] = rng.random_range(1..5) as f64;
            f[28] = 1.0;
            f[31] = rng.random_range(1..50) as f64;
            f[32] = rng.random_range(1..50) as f64;
            f[36] = rate(rng, 0.2);
        }
        U2R => {
            f[0] = rng.random_range(10..500) as f64;
            f[4] = rng.random_range(1000..10000) as f64;
            f[9] = rng.random_range(1..4) as f64;
            f[11] = 1.0;
            f[12] = rng.random_range(0..3) as f64;
            f[13] = 1.0;
            f[15] = rng.random_range(0..5) as f64;
            f[16] = rng.random_range(0..3) as f64;
            f[17] = rng.random_range(0..2) as f64;
            f[22] = 1.0;
            f[23] = 1.0;
            f[28] = 1.0;
            f[31] = rng.random_range(1..20) as f64;
            f[32] = rng.random_range(1..20) as f64;
        }
    }
    if noisy {
        // A few mislabeled-looking rows keep the problem from being trivially separable.
        f[24] = rate(rng, 0.5);
        f[28] = rate(rng, 0.5);
    }
    let label_set = labels(class);
    let label = label_set[rng.random_range(0..label_set.len())];
    let mut line = String::new();
    for (i, v) in f.iter().enumerate() {
        match i {
            1 => line.push_str(protocol),
            2 => line.push_str(service),
            3 => line.push_str(flag),
            _ if v.fract() == 0.0 => {
                let _ = write!(line, "{}", *v as i64);
            }
            _ => {
                let _ = write!(line, "{v:.2}");
            }
        }
        line.push(',');
    }
    let _ = write!(line, "{label},{}", rng.random_range(5..22));
    line
}

/// `n` record lines drawn with the NSL-KDD class shares. Every class appears
/// at least once when `n ≥ 5`.
pub fn synthetic_lines(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes: Vec<AttackClass> = (0..n).map(|_| pick_class(&mut rng)).collect();
    if n >= 5 {
        for (k, class) in AttackClass::ALL.iter().enumerate() {
            if !classes.contains(class) {
                classes[k * (n / 5)] = *class;
            }
        }
    }
    classes.into_iter().map(|c| synthetic_line(c, &mut rng)).collect()
}

/// Writes `n` synthetic records to `path`, one per line.
pub fn write_synthetic(path: &Path, n: usize, seed: u64) -> io::Result<()> {
    let mut text = synthetic_lines(n, seed).join("\n");
    text.push('\n');
    std::fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{encode_labels, parse_nslkdd};

    #[test]
    fn lines_parse_and_cover_every_class() {
        let text = synthetic_lines(2000, 1).join("\n");
        let records = parse_nslkdd(text.as_bytes()).unwrap();
        assert_eq!(records.len(), 2000);
        let labels = encode_labels(&records).unwrap();
        for class in AttackClass::ALL {
            assert!(labels.contains(&class.code()), "{class} missing");
        }
    }

    #[test]
    fn generator_is_seeded() {
        assert_eq!(synthetic_lines(50, 9), synthetic_lines(50, 9));
        assert_ne!(synthetic_lines(50, 9), synthetic_lines(50, 10));
    }
}

//! Cross-checks against values produced by an independent Python oracle
//! (`fixtures/gen_oracles.py`, exact rationals and 60-digit floats).

use serde_json::Value;
use sparse_parity::{binom, entropy, family_size_m, ratio_bound_report, CoverParams};

fn fixtures() -> Value {
    serde_json::from_str(include_str!("fixtures/oracles.json")).unwrap()
}

#[test]
fn binomials() {
    for row in fixtures()["binom"].as_array().unwrap() {
        let (x, y) = (row["x"].as_u64().unwrap(), row["y"].as_u64().unwrap());
        assert_eq!(binom(x, y).to_string(), row["c"].as_str().unwrap(), "C({x},{y})");
    }
}

#[test]
fn family_sizes() {
    for row in fixtures()["family_size"].as_array().unwrap() {
        let big_t = row["T"].as_u64().unwrap() as usize;
        let k = row["k"].as_u64().unwrap() as usize;
        let alpha = row["ak"].as_u64().unwrap() as usize / k;
        let p = CoverParams::new(big_t, k, big_t / alpha, alpha).unwrap();
        assert_eq!(family_size_m(&p), row["m"].as_u64().unwrap(), "T={big_t} k={k}");
    }
}

#[test]
fn entropy_values() {
    for row in fixtures()["entropy"].as_array().unwrap() {
        let p = row["p"].as_f64().unwrap();
        let want: f64 = row["h"].as_str().unwrap().parse().unwrap();
        assert!((entropy(p).unwrap() - want).abs() <= 1e-12, "H({p})");
    }
}

#[test]
fn ratio_reports() {
    for row in fixtures()["ratio_bound"].as_array().unwrap() {
        let get = |key: &str| row[key].as_u64().unwrap() as usize;
        let r = ratio_bound_report(get("t"), get("k"), get("alpha")).unwrap();
        assert_eq!(r.holds, row["holds"].as_bool().unwrap());
        assert_eq!(r.below_trivial, row["below_trivial"].as_bool().unwrap());
        assert!((r.rhs_log2 - row["rhs_log2"].as_f64().unwrap()).abs() < 1e-6);
    }
}

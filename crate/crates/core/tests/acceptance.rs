//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;

use qcsse::contraction::{contract, merge_same_bond, sandwich_eliminate};
use qcsse::ed;
use qcsse::harness::{self, Axis, BasisName, CampaignSpec, ResultRecord, RunConfig};
use qcsse::model::{BondTerm, ModelSpec, PauliFlavor};
use qcsse::oracle::{ancilla_weight, brute_force_partition, cutoff_for_tail};
use qcsse::sampler::{RngStream, Sampler, SweepPlan, UpdateKind};
use qcsse::statevec::{BasisChoice, BasisLabel};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn config(n: usize, delta: f64, m: f64, temperature: f64, basis: BasisName, seed: u64) -> RunConfig {
    RunConfig {
        n_sites: n,
        delta,
        m_x: m,
        m_z: m,
        temperature,
        basis,
        seed,
        ..RunConfig::default()
    }
}

fn run(c: &RunConfig) -> Result<ResultRecord, String> {
    harness::run(c).map_err(|e| e.to_string())
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(101);
    let mut worst: f64 = 0.0;
    for case in 0..500 {
        let n = 2 + rng.index(3);
        let delta = [0.3, 0.7, 1.0][rng.index(3)];
        let m = [0.1, 0.5, 1.0, 2.5][rng.index(4)];
        let beta = 0.25 + rng.uniform();
        let basis = match case % 3 {
            0 => BasisName::Z,
            1 => BasisName::THadamard,
            _ => BasisName::XQuarterSite0,
        };
        let model = ModelSpec::new(n, delta, m, m, beta).map_err(|e| e.to_string())?;
        let s = Sampler::new(model, basis.build(n), SweepPlan::default()).map_err(|e| e.to_string())?;
        let len = rng.index(12 - n + 1);
        let string: Vec<usize> = (0..len).map(|_| rng.index(s.terms().len())).collect();
        let terms: Vec<BondTerm> = string.iter().map(|&i| s.terms()[i]).collect();
        let alpha = BasisLabel::new(rng.index(1 << n), n);
        let fast = s.weight(alpha, &string);
        let slow = ancilla_weight(beta, alpha, s.basis(), &terms).map_err(|e| e.to_string())?;
        worst = worst.max((fast - slow).abs() / slow.abs().max(1.0));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-10, format!("max relative deviation {worst:e}"))?;
    ensure(secs < 60.0, format!("took {secs:.1} s"))?;
    Ok(format!("500 configurations, max relative deviation {worst:.1e}, {secs:.2} s"))
}

fn contraction_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(102);
    let shifts = [1.0, 1.0, 0.5, 2.0, 3.0];
    let (mut worst, mut before, mut after): (f64, usize, usize) = (0.0, 0, 0);
    for _ in 0..1000 {
        let n = 2 + rng.index(3);
        let len = rng.index(9);
        let string = random_string(&mut rng, n, len, &shifts);
        let cs = contract(&string);
        let diff = string_matrix(n, &string) - string_matrix(n, &cs.terms) * c(cs.prefactor);
        worst = worst.max(max_abs(&diff));
        before += string.len();
        after += cs.terms.len();
    }
    ensure(worst <= 1e-10, format!("random strings deviate by {worst:e}"))?;

    for (m1, m2, factor, shift) in [(1.0, 1.0, 2.0, 1.0), (1.0, 3.0, 4.0, 1.0), (2.0, 2.0, 4.0, 1.25)] {
        for flavor in [PauliFlavor::ZZ, PauliFlavor::XX] {
            let a = BondTerm::antiferro(4, 1, flavor, m1);
            let b = BondTerm::antiferro(4, 1, flavor, m2);
            let (f, merged) = merge_same_bond(&a, &b).ok_or("merge not applied")?;
            ensure(
                (f - factor).abs() < 1e-15 && (merged.shift - shift).abs() < 1e-15,
                format!("merge ({m1}, {m2}) gave factor {f}, shift {}", merged.shift),
            )?;
            let diff = string_matrix(4, &[a, b]) - term_matrix(4, &merged) * c(f);
            ensure(max_abs(&diff) <= 1e-10, "merge identity fails as a matrix")?;
        }
    }

    let zz = BondTerm::antiferro(4, 1, PauliFlavor::ZZ, 1.0);
    for left_neighbour in [true, false] {
        let xx = BondTerm::antiferro(4, if left_neighbour { 0 } else { 2 }, PauliFlavor::XX, 1.0);
        let (f, kept) = sandwich_eliminate(&zz, &xx, &zz).ok_or("sandwich not applied")?;
        ensure((f - 2.0).abs() < 1e-15 && kept == zz, format!("sandwich factor {f}"))?;
        let diff = string_matrix(4, &[zz, xx, zz]) - term_matrix(4, &zz) * c(2.0);
        ensure(max_abs(&diff) <= 1e-10, "sandwich identity fails as a matrix")?;
    }
    let zz2 = BondTerm::antiferro(4, 1, PauliFlavor::ZZ, 2.0);
    let xx = BondTerm::antiferro(4, 0, PauliFlavor::XX, 1.0);
    ensure(sandwich_eliminate(&zz2, &xx, &zz2).is_none(), "sandwich applied at shift 2")?;

    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, format!("took {secs:.1} s"))?;
    Ok(format!(
        "1000 strings, max deviation {worst:.1e}, {before} -> {after} operators, merge and sandwich identities exact, {secs:.2} s"
    ))
}

fn all_signs_positive(c: &RunConfig) -> Result<(u64, i64), String> {
    let acc = harness::run_chains(c).map_err(|e| e.to_string())?;
    Ok((acc.count(), acc.totals().sign))
}

fn sign_free_limits() -> Outcome {
    let mut parts = Vec::new();
    for n in [3, 4] {
        let c = config(n, 0.0, 1.0, 2.0, BasisName::THadamard, 31);
        let (count, sign) = all_signs_positive(&c)?;
        ensure(sign == count as i64, format!("Ising limit N={n}: sign sum {sign} of {count}"))?;
        parts.push(format!("Ising N={n}: {count}/{count}"));
    }
    for n in [4, 6] {
        let c = config(n, 1.0, 1.0, 2.0, BasisName::Z, 32);
        let (count, sign) = all_signs_positive(&c)?;
        ensure(sign == count as i64, format!("z basis N={n}: sign sum {sign} of {count}"))?;
        parts.push(format!("z N={n}: {count}/{count}"));
    }
    Ok(format!("every sign +1 ({})", parts.join(", ")))
}

fn ed_cross_check() -> Outcome {
    let mut points = Vec::new();
    for n in [2, 3, 4] {
        for t in [1.0, 2.0] {
            points.push(config(n, 0.0, 1.0, t, BasisName::THadamard, 40 + n as u64));
            if n % 2 == 0 {
                points.push(config(n, 1.0, 1.0, t, BasisName::Z, 50 + n as u64));
            }
        }
    }
    let mut worst: f64 = 0.0;
    for c in &points {
        let r = run(c)?;
        let e_ed = r.e_ed.ok_or("no ED reference")?;
        let z = (r.energy - e_ed).abs() / r.energy_err;
        worst = worst.max(z);
        ensure(
            z <= 3.0,
            format!(
                "N={} delta={} T={} basis={}: E={:.5}+-{:.5} vs ED {e_ed:.5}",
                r.n_sites, r.delta, r.temperature, r.basis, r.energy, r.energy_err
            ),
        )?;
    }
    Ok(format!("{} points, worst |E - E_ED| = {worst:.2} sigma", points.len()))
}

fn micro_instance_sign() -> Outcome {
    let (n, beta, m) = (2, 0.25, 0.1);
    let model = ModelSpec::new(n, 1.0, m, m, beta).map_err(|e| e.to_string())?;
    let basis = BasisChoice::x_quarter_site0(n);
    let n_max = cutoff_for_tail(&model, 1e-8).map_err(|e| e.to_string())?;
    let exact = brute_force_partition(&model, &basis, n_max).map_err(|e| e.to_string())?;
    ensure(exact.tail_bound < 1e-8, format!("tail bound {:e}", exact.tail_bound))?;
    let target = exact.average_sign();
    ensure(target < 1.0 - 1e-3, format!("instance is sign-free (Z/Z' = {target})"))?;

    let z_ed = ed::spectrum(&model)
        .map_err(|e| e.to_string())?
        .partition_function(beta, model.energy_offset());
    ensure(
        (exact.z - z_ed).abs() <= exact.tail_bound + 1e-10 * z_ed,
        format!("enumerated Z {} vs ED {z_ed}", exact.z),
    )?;

    let c = RunConfig {
        n_sites: n,
        m_x: m,
        m_z: m,
        temperature: 1.0 / beta,
        basis: BasisName::XQuarterSite0,
        sweeps: 200_000,
        seed: 55,
        ..RunConfig::default()
    };
    let r = run(&c)?;
    let z = (r.avg_sign - target).abs() / r.avg_sign_err;
    ensure(
        z <= 3.0,
        format!("sampled {:.5}+-{:.5} vs exact {target:.5}", r.avg_sign, r.avg_sign_err),
    )?;
    Ok(format!(
        "Z/Z' = {target:.5} (n_max {n_max}, tail {:.1e}), sampled {:.5} +- {:.5} ({z:.2} sigma)",
        exact.tail_bound, r.avg_sign, r.avg_sign_err
    ))
}

const M_GRID: [f64; 6] = [0.1, 0.5, 1.0, 1.5, 2.0, 2.5];

fn m_grid_records() -> Result<Vec<ResultRecord>, String> {
    let spec = CampaignSpec {
        axis: Axis::MJoint,
        grid: M_GRID.to_vec(),
        base: config(3, 1.0, 1.0, 2.0, BasisName::THadamard, 60),
        workers: 0,
    };
    harness::campaign(&spec)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|row| row.record.ok_or_else(|| row.error.unwrap_or_default()))
        .collect()
}

fn shift_scan(records: &[ResultRecord]) -> Outcome {
    for (a, b) in records.iter().zip(&records[1..]) {
        let sigma = a.avg_sign_err.hypot(b.avg_sign_err);
        ensure(
            b.avg_sign >= a.avg_sign - 2.0 * sigma,
            format!("<sgn> drops from {:.4} (M={}) to {:.4} (M={})", a.avg_sign, a.m_z, b.avg_sign, b.m_z),
        )?;
        ensure(
            b.mean_n > a.mean_n && b.raw_mean_n > a.raw_mean_n,
            format!("<n> not increasing between M={} and M={}", a.m_z, b.m_z),
        )?;
    }
    let signs: Vec<String> = records.iter().map(|r| format!("{:.3}", r.avg_sign)).collect();
    let orders: Vec<String> = records.iter().map(|r| format!("{:.2}", r.mean_n)).collect();
    Ok(format!("<sgn> = [{}], <n> = [{}]", signs.join(", "), orders.join(", ")))
}

fn reference_values(records: &[ResultRecord]) -> String {
    [(0.1, 0.31), (1.0, 0.92)]
        .iter()
        .map(|&(m, want)| {
            let r = records.iter().find(|r| r.m_z == m).expect("grid point");
            let verdict = if (r.avg_sign - want).abs() <= 0.05 { "within" } else { "outside" };
            format!("M={m}: {:.3} +- {:.3} vs {want} ({verdict} 0.05)", r.avg_sign, r.avg_sign_err)
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn even_odd() -> Outcome {
    let spec = CampaignSpec {
        axis: Axis::Size,
        grid: vec![4.0, 5.0, 6.0, 7.0],
        base: config(4, 1.0, 1.0, 2.0, BasisName::THadamard, 70),
        workers: 0,
    };
    let rows = harness::campaign(&spec).map_err(|e| e.to_string())?;
    let r: Vec<ResultRecord> = rows
        .into_iter()
        .map(|row| row.record.ok_or_else(|| row.error.unwrap_or_default()))
        .collect::<Result<_, _>>()?;
    let mut parts = Vec::new();
    for (even, odd) in [(&r[0], &r[1]), (&r[2], &r[3])] {
        let sigma = even.avg_sign_err.hypot(odd.avg_sign_err);
        let gap = (even.avg_sign - odd.avg_sign) / sigma;
        ensure(
            gap > 2.0,
            format!(
                "N={}: {:.4}+-{:.4} vs N={}: {:.4}+-{:.4}",
                even.n_sites, even.avg_sign, even.avg_sign_err, odd.n_sites, odd.avg_sign, odd.avg_sign_err
            ),
        )?;
        parts.push(format!(
            "N={} {:.4} > N={} {:.4} ({gap:.1} sigma)",
            even.n_sites, even.avg_sign, odd.n_sites, odd.avg_sign
        ));
    }
    Ok(parts.join(", "))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn error_scaling(records: &[ResultRecord]) -> Outcome {
    let xs: Vec<f64> = records.iter().map(|r| r.raw_mean_n.ln()).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.std_n.ln()).collect();
    let s = slope(&xs, &ys);
    ensure((s - 0.5).abs() <= 0.2, format!("slope {s:.3}"))?;
    Ok(format!("slope of log std(n) against log <n> = {s:.3}"))
}

fn detailed_balance() -> Outcome {
    let model = ModelSpec::new(2, 1.0, 0.1, 0.1, 0.25).map_err(|e| e.to_string())?;
    let s = Sampler::new(model, BasisChoice::x_quarter_site0(2), SweepPlan::default())
        .map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for kind in [UpdateKind::Alpha, UpdateKind::Replace, UpdateKind::InsertRemove] {
        let (balance, stationary) = balance_violation(&s, kind, 4);
        ensure(
            balance <= 1e-12 && stationary <= 1e-12,
            format!("{kind:?}: balance {balance:e}, stationarity {stationary:e}"),
        )?;
        parts.push(format!("{kind:?} {:.0e}", balance.max(stationary)));
    }
    Ok(format!("n <= 4, worst relative violation: {}", parts.join(", ")))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = CampaignSpec {
        axis: Axis::MJoint,
        grid: vec![0.5, 1.0],
        base: RunConfig {
            sweeps: 4_000,
            ..config(3, 1.0, 1.0, 2.0, BasisName::THadamard, 80)
        },
        workers: 2,
    };
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        let rows = harness::campaign(&spec).map_err(|e| e.to_string())?;
        harness::write_outputs(&path, &spec.base, Some(&spec), &rows).map_err(|e| e.to_string())?;
        let csv = std::fs::read(&path).map_err(|e| e.to_string())?;
        let json = std::fs::read(harness::sidecar_path(&path)).map_err(|e| e.to_string())?;
        outputs.push((csv, json));
    }
    ensure(outputs[0].0 == outputs[1].0, "CSV outputs differ")?;
    ensure(outputs[0].1 == outputs[1].1, "JSON sidecars differ")?;
    Ok(format!("two runs, {} identical CSV bytes", outputs[0].0.len()))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {id:>2} {name}: {detail}");
    };

    report(1, "oracle equivalence", oracle_equivalence());
    report(2, "contraction exactness", contraction_exactness());
    report(3, "sign-free limits", sign_free_limits());
    report(4, "ED cross-check", ed_cross_check());
    report(5, "micro-instance average sign", micro_instance_sign());
    let grid = m_grid_records();
    report(6, "shift scan monotonicity", grid.clone().and_then(|r| shift_scan(&r)));
    report(7, "even-odd effect", even_odd());
    report(8, "order fluctuation scaling", grid.clone().and_then(|r| error_scaling(&r)));
    report(9, "detailed balance", detailed_balance());
    report(10, "determinism", determinism());
    if let Ok(r) = &grid {
        println!("INFO  6 reference values (not gating): {}", reference_values(r));
    }

    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}

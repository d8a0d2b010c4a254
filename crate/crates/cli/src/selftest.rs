//! Built-in fixtures with known answers.

use pseudocone::fixtures;
use pseudocone::pipeline::{brute_force_gauss_oracle, solve_discrete_gauss, solve_semidiscrete_gauss, Status};
use pseudocone::semidiscrete::SemiDiscreteOptions;
use pseudocone::Tolerances;

use crate::{Failure, EXIT_CERTIFICATION};

/// Optimal value of the two-atom quadrant fixture.
const TWO_ATOMS_VALUE: f64 = 0.0408220;

type Check = fn() -> Result<String, String>;

fn two_atoms_discrete() -> Result<String, String> {
    let (mu, nu) = fixtures::two_atoms();
    let sol = solve_discrete_gauss(&fixtures::quadrant(), &mu, &nu, &Tolerances::default()).map_err(|e| e.to_string())?;
    let pseudocone::pipeline::SolutionDetail::Discrete(t) = &sol.detail else {
        return Err("wrong regime".into());
    };
    let corner = 0.96 / 1.4;
    let vertex = sol
        .k
        .extreme_points()
        .iter()
        .any(|p| (p[0] - corner).abs() < 1e-6 && (p[1] - corner).abs() < 1e-6);
    if (t.primal - TWO_ATOMS_VALUE).abs() > 1e-6 || (t.dual - TWO_ATOMS_VALUE).abs() > 1e-6 || !vertex {
        return Err(format!("S = {}, I = {}, corner found: {vertex}", t.primal, t.dual));
    }
    Ok(format!("S = I = {:.7}, corner ({corner:.6}, {corner:.6})", t.primal))
}

fn two_atoms_oracle() -> Result<String, String> {
    let (mu, nu) = fixtures::two_atoms();
    let o = brute_force_gauss_oracle(&mu, &nu, 2000, &Tolerances::default()).map_err(|e| e.to_string())?;
    if (o.value - TWO_ATOMS_VALUE).abs() > 1e-6 {
        return Err(format!("enumeration gives {}", o.value));
    }
    Ok(format!("enumeration value {:.7}", o.value))
}

fn arc_two_atoms(weights: &[f64]) -> Result<String, String> {
    let (mu, nu) = fixtures::arc_two_atoms(4096, weights);
    let sol = solve_semidiscrete_gauss(&fixtures::quadrant(), &mu, &nu, &SemiDiscreteOptions::default())
        .map_err(|e| e.to_string())?;
    if sol.status != Status::Verified {
        return Err(sol.certificates.failures.join("; "));
    }
    Ok(format!(
        "pushforward residual {:.1e}",
        sol.certificates.pushforward_residual.unwrap_or(f64::NAN)
    ))
}

fn copolar_involution() -> Result<String, String> {
    let k = fixtures::two_vertex_body();
    if k.copolar().copolar() != k {
        return Err("K** differs from K".into());
    }
    Ok("K** = K".into())
}

pub fn run() -> Result<(), Failure> {
    let checks: [(&str, Check); 5] = [
        ("two-atom fixture, discrete regime", two_atoms_discrete),
        ("two-atom fixture, enumeration oracle", two_atoms_oracle),
        ("arc quadrature, equal weights", || arc_two_atoms(&[0.5, 0.5])),
        ("arc quadrature, weights 1/4 and 3/4", || arc_two_atoms(&[0.25, 0.75])),
        ("copolar involution", copolar_involution),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_CERTIFICATION,
            message: format!("{failed} selftest checks failed"),
        })
    }
}

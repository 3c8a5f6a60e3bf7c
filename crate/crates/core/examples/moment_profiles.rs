//! L^p profiles of marginals of the cube along a coordinate and along the
//! main diagonal, exact or by quadrature next to Monte Carlo, with their
//! psi_2 norms.

use subgauss::bodies::BodySpec;
use subgauss::construction::direction_norm;
use subgauss::moments::{LpEvaluator, MomentProfile, SampleEvaluator};
use subgauss::sampling::{default_method, sample_uniform};
use subgauss::Result;

fn profile(ev: &dyn LpEvaluator, id: usize, theta: &[f64], ps: &[f64]) -> Result<MomentProfile> {
    let ps: Vec<f64> = ps
        .iter()
        .copied()
        .filter(|&p| p <= ev.max_p(theta))
        .collect();
    Ok(MomentProfile {
        theta_id: id,
        theta: theta.to_vec(),
        n: theta.len(),
        lk: 0.0,
        entries: ev.norms(theta, &ps)?,
        truncated: false,
    })
}

fn main() -> Result<()> {
    let n = 12;
    let body = BodySpec::cube(n)?;
    let batch = sample_uniform(&body, 200_000, 11, default_method(&body))?;
    let mc = SampleEvaluator::with_body(&body, &batch, None);
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let diag = vec![1.0 / (n as f64).sqrt(); n];
    let ps = [1.0, 2.0, 4.0, 8.0, 12.0];
    for (name, theta) in [("e1", &e1), ("diagonal", &diag)] {
        // closed-form marginal where there is one, exact even moments otherwise
        let entries = ps
            .iter()
            .filter_map(|&p| direction_norm(&body, theta, p, None).transpose())
            .collect::<Result<Vec<_>>>()?;
        let q = MomentProfile {
            theta_id: 0,
            theta: theta.clone(),
            n,
            lk: 0.0,
            entries,
            truncated: false,
        };
        let m = profile(&mc, 0, theta, &ps)?;
        println!("{name}:");
        for b in &m.entries {
            let exact = q
                .value_at(b.p)
                .map_or("-".to_string(), |v| format!("{v:.5}"));
            println!(
                "  p = {:>4}: reference {exact:>8}   monte carlo {:.5} [{:.5}, {:.5}]",
                b.p, b.value, b.ci_low, b.ci_high
            );
        }
        let psi = q.psi2_norm()?;
        println!("  psi_2 = {:.4} at p = {}", psi.value, psi.attained_p);
    }
    Ok(())
}

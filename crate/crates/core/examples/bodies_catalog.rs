//! Builds every body kind, checks membership and support values, and prints
//! a few exact marginal moments.

use subgauss::bodies::BodyDescriptor;
use subgauss::Result;

fn main() -> Result<()> {
    let n = 6;
    let kinds = [
        BodyDescriptor::new("cube", n),
        BodyDescriptor::new("ball", n),
        BodyDescriptor::new("simplex", n),
        BodyDescriptor::new("lp_ball", n).with_params(serde_json::json!({"p": 1})),
        BodyDescriptor::new("cone", n),
    ];
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let diag: Vec<f64> = vec![1.0 / (n as f64).sqrt(); n];
    println!(
        "{:<14} {:>10} {:>10} {:>12} {:>12}",
        "body", "h(e1)", "h(diag)", "E<X,e1>^2", "origin in"
    );
    for d in &kinds {
        let body = d.build()?;
        let second = body
            .even_moment(&e1, 1)
            .map_or("-".to_string(), |m| format!("{m:.6}"));
        println!(
            "{:<14} {:>10.4} {:>10.4} {:>12} {:>12}",
            body.name(),
            body.support(&e1)?,
            body.support(&diag)?,
            second,
            body.contains(&vec![0.0; n])?
        );
    }

    let json = r#"{"kind": "lp_ball", "n": 4, "params": {"p": 3}}"#;
    let body = BodyDescriptor::parse(json)?.build()?;
    println!(
        "\nparsed {} from JSON, symmetric: {}",
        body.name(),
        body.is_symmetric()
    );
    Ok(())
}

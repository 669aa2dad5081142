//! Drift and scale functions written as expressions, with symbolic
//! derivatives and a positivity check of the scale over a grid.

use stable_sde::model::{parse_expr, validate_model, ModelSpec, ParamSpec, ThetaVector};

fn main() -> stable_sde::Result<()> {
    let e = parse_expr("exp(gamma*cos(x))", &["x", "gamma"])?;
    println!("c(x, gamma)        = {e}");
    println!("dc/dgamma          = {}", e.diff("gamma"));
    println!("dc/dx              = {}", e.diff("x"));

    let model = ModelSpec::new(
        "alpha1*(x - alpha2)",
        "exp(gamma*cos(x))",
        vec![ParamSpec::new("alpha1", -10.0, 10.0), ParamSpec::new("alpha2", -10.0, 10.0)],
        vec![ParamSpec::new("gamma", -10.0, 10.0)],
    )?;
    let theta = ThetaVector::new(vec![-1.0, 0.5], vec![0.5]).flat();
    let mut da = vec![0.0; model.p_alpha()];
    let mut dc = vec![0.0; model.p_gamma()];
    model.drift_gradient(1.0, &theta, &mut da)?;
    model.scale_gradient(1.0, &theta, &mut dc)?;
    println!("a(1, theta) = {}, d/dalpha = {da:?}", model.drift_at(1.0, &theta)?);
    println!("c(1, theta) = {}, d/dgamma = {dc:?}", model.scale_at(1.0, &theta)?);

    let grid: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.5).collect();
    let probes = [ThetaVector::new(vec![-1.0, 0.5], vec![0.5]), ThetaVector::new(vec![2.0, -3.0], vec![-4.0])];
    println!("exp scale: {:?}", validate_model(&model, &probes, &grid).passed());

    // a scale that can vanish is caught before any inference runs
    let bad = ModelSpec::new("alpha*x", "gamma*x", vec![ParamSpec::new("alpha", -1.0, 1.0)], vec![ParamSpec::new("gamma", 0.1, 1.0)])?;
    let report = validate_model(&bad, &[ThetaVector::new(vec![0.0], vec![0.5])], &grid);
    println!("linear scale: {} violations out of {}", report.violations.len(), report.checked);

    match ModelSpec::new("alpha*x + gamma", "1", vec![ParamSpec::new("alpha", -1.0, 1.0)], vec![ParamSpec::new("gamma", 0.0, 1.0)]) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}

//! Interactive browser demo: three operations of the resummation engine
//! exposed through wasm-bindgen, returning JSON for a plain static page.
//!
//! The wrappers are thin; the JSON-producing functions are ordinary Rust and
//! unit-tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use selfsim::borel::{
    asymptotics_from_transform, select_u, transform_approximant, Observable, UGrid,
};
use selfsim::factor::{build, Validity};
use selfsim::numerics::{Prec, Real};
use selfsim::ode::{bell_series, kink_series, map_back, OdeSpec, SolitonEquation};
use selfsim::oracles::{oscillator_coefficients, soliton_reference, z_coefficients};
use selfsim::series::PowerSeries;

#[derive(Serialize)]
struct Curve {
    x: Vec<f64>,
    exact: Vec<f64>,
    approx: Vec<Option<f64>>,
    max_abs_error: f64,
    order_used: usize,
    note: String,
}

#[derive(Serialize)]
struct Explore {
    x: Vec<f64>,
    truncated: Vec<Option<f64>>,
    resummed: Vec<Option<f64>>,
    amplitude: Option<f64>,
    exponent: Option<f64>,
    validity: String,
    s_k: f64,
    max_pair_product: f64,
    factors: Vec<String>,
    note: String,
}

#[derive(Serialize)]
struct SweepRow {
    k: usize,
    status: String,
    u: Option<f64>,
    c: Option<f64>,
    nu: Option<f64>,
}

#[derive(Serialize)]
struct Sweep {
    rows: Vec<SweepRow>,
    exact_c: f64,
    exact_nu: f64,
    fixture: String,
}

fn err_json(msg: &str) -> String {
    format!("{{\"error\":{}}}", serde_json::to_string(msg).unwrap())
}

/// Soliton reconstruction: factor-approximant of the z-series mapped back to
/// physical x, next to the closed-form solution.
pub fn soliton_curve_json(
    equation: &str,
    epsilon: f64,
    order: usize,
    x_max: f64,
    points: usize,
    digits: u32,
) -> String {
    let p = Prec::new(digits);
    let eq = match equation {
        "kink" => SolitonEquation::Kink,
        "bell" => SolitonEquation::Bell,
        _ => return err_json("equation must be kink or bell"),
    };
    if !(epsilon > 0.0) {
        return err_json("epsilon must be positive");
    }
    let order = order.clamp(3, 24);
    let eps = Real::from_f64(epsilon, p);
    let spec = match eq {
        SolitonEquation::Kink => OdeSpec::kink(eps.clone(), order, p),
        SolitonEquation::Bell => OdeSpec::bell(eps.clone(), order, p),
    };
    let series = match eq {
        SolitonEquation::Kink => kink_series(&spec, p),
        SolitonEquation::Bell => bell_series(&spec, p),
    };
    let series = match series {
        Ok(s) => s,
        Err(e) => return err_json(&e.to_string()),
    };
    let fa = match build(&series, order) {
        Ok(fa) => fa,
        Err(e) => return err_json(&e.to_string()),
    };
    let n = points.clamp(16, 2048);
    let mut xs = Vec::with_capacity(n);
    let mut exact = Vec::with_capacity(n);
    let mut approx = Vec::with_capacity(n);
    let mut worst = 0.0f64;
    for i in 0..n {
        let x = -x_max + 2.0 * x_max * i as f64 / (n - 1) as f64;
        let xv = Real::from_f64(x, p);
        let ex = soliton_reference(eq, &eps, &xv, p)
            .map(|v| v.to_f64())
            .unwrap_or(f64::NAN);
        let ap = map_back(&fa, &spec, &xv).ok().map(|v| v.to_f64());
        if let Some(a) = ap {
            worst = worst.max((a - ex).abs());
        }
        xs.push(x);
        exact.push(ex);
        approx.push(ap);
    }
    let curve = Curve {
        x: xs,
        exact,
        approx,
        max_abs_error: worst,
        order_used: fa.effective_order(),
        note: if fa.reduced_from().is_some() {
            "moment system was rank-deficient: the expansion is exactly a lower-order factor form"
                .into()
        } else {
            String::new()
        },
    };
    serde_json::to_string(&curve).unwrap()
}

/// Resummation of a user-supplied series: truncated polynomial vs factor
/// approximant, with the large-argument power law and diagnostics.
pub fn factor_explore_json(coeffs_csv: &str, k: usize, x_max: f64, points: usize, digits: u32) -> String {
    let p = Prec::new(digits);
    let mut coeffs = Vec::new();
    for part in coeffs_csv.split(',') {
        match Real::parse(part.trim(), p) {
            Some(v) => coeffs.push(v),
            None => return err_json(&format!("coefficient {:?} does not parse", part.trim())),
        }
    }
    if coeffs.len() < 3 {
        return err_json("need at least three coefficients");
    }
    let series = match PowerSeries::new(coeffs, p) {
        Ok(s) => s,
        Err(e) => return err_json(&e.to_string()),
    };
    let k = k.clamp(2, series.order());
    let fa = match build(&series, k) {
        Ok(fa) => fa,
        Err(e) => return err_json(&e.to_string()),
    };
    let asy = fa.asymptotics();
    let diag = fa.diagnostics(&[]);
    let n = points.clamp(16, 2048);
    let mut xs = Vec::with_capacity(n);
    let mut trunc = Vec::with_capacity(n);
    let mut res = Vec::with_capacity(n);
    for i in 0..n {
        let x = x_max * i as f64 / (n - 1) as f64;
        let xv = Real::from_f64(x, p);
        xs.push(x);
        let t = series.truncated(k).eval_poly(&xv).to_f64();
        trunc.push(if t.is_finite() { Some(t) } else { None });
        res.push(fa.evaluate(&xv).ok().map(|v| v.to_f64()));
    }
    let out = Explore {
        x: xs,
        truncated: trunc,
        resummed: res,
        amplitude: Some(asy.amplitude.to_f64()).filter(|v| v.is_finite()),
        exponent: Some(asy.exponent.to_f64()).filter(|v| v.is_finite()),
        validity: match asy.validity {
            Validity::Clean => "clean".into(),
            Validity::Flagged => "flagged".into(),
        },
        s_k: diag.s_k.to_f64(),
        max_pair_product: diag.max_pair_product.to_f64(),
        factors: fa
            .pairs()
            .iter()
            .map(|pr| match pr.kind {
                selfsim::factor::FactorKind::Exponential => {
                    format!("exp({} x)", pr.rate.as_ref().map(|r| r.to_f64()).unwrap_or(0.0))
                }
                selfsim::factor::FactorKind::Power => format!(
                    "(1 + ({:.6}{:+.6}i) x)^({:.6}{:+.6}i)",
                    pr.amplitude.re.to_f64(),
                    pr.amplitude.im.to_f64(),
                    pr.exponent.re.to_f64(),
                    pr.exponent.im.to_f64()
                ),
            })
            .collect(),
        note: asy.reason.unwrap_or_default(),
    };
    serde_json::to_string(&out).unwrap()
}

/// Borel order sweep on a built-in divergent-series fixture: per-order
/// strong-coupling amplitude and exponent next to the exact limit.
pub fn borel_sweep_json(fixture: &str, k_max: usize, strategy: &str, digits: u32) -> String {
    let p = Prec::new(digits);
    let k_max = k_max.clamp(3, 16);
    let (series, exact_c, exact_nu) = match fixture {
        "oscillator" => {
            let s = match oscillator_coefficients(k_max, p) {
                Ok(s) => s,
                Err(e) => return err_json(&e.to_string()),
            };
            (s, 0.667986, 1.0 / 3.0)
        }
        "z_partition" => (
            z_coefficients(k_max, p),
            1.022765,
            -0.25,
        ),
        _ => return err_json("fixture must be oscillator or z_partition"),
    };
    let grid = UGrid {
        min: -0.9,
        max: 4.0,
        step: 0.05,
    };
    let mut rows = Vec::new();
    for k in 2..=k_max {
        let u = match strategy {
            "grid" if k >= 3 => match select_u(&series, k, &grid, &Observable::Exponent) {
                Ok(cp) => cp.u,
                Err(_) => {
                    rows.push(SweepRow {
                        k,
                        status: "skipped-nonreal".into(),
                        u: None,
                        c: None,
                        nu: None,
                    });
                    continue;
                }
            },
            _ => Real::zero(p),
        };
        let row = match transform_approximant(&series, k, &u)
            .and_then(|t| asymptotics_from_transform(&t, &u))
        {
            Ok(asy) if asy.validity == Validity::Clean => SweepRow {
                k,
                status: "ok".into(),
                u: Some(u.to_f64()),
                c: Some(asy.amplitude.to_f64()),
                nu: Some(asy.exponent.to_f64()),
            },
            Ok(_) => SweepRow {
                k,
                status: "skipped-nonreal".into(),
                u: Some(u.to_f64()),
                c: None,
                nu: None,
            },
            Err(_) => SweepRow {
                k,
                status: "skipped-singular".into(),
                u: Some(u.to_f64()),
                c: None,
                nu: None,
            },
        };
        rows.push(row);
    }
    serde_json::to_string(&Sweep {
        rows,
        exact_c,
        exact_nu,
        fixture: fixture.into(),
    })
    .unwrap()
}

#[wasm_bindgen]
pub fn soliton_curve(
    equation: &str,
    epsilon: f64,
    order: usize,
    x_max: f64,
    points: usize,
    digits: u32,
) -> String {
    soliton_curve_json(equation, epsilon, order, x_max, points, digits)
}

#[wasm_bindgen]
pub fn factor_explore(coeffs_csv: &str, k: usize, x_max: f64, points: usize, digits: u32) -> String {
    factor_explore_json(coeffs_csv, k, x_max, points, digits)
}

#[wasm_bindgen]
pub fn borel_sweep(fixture: &str, k_max: usize, strategy: &str, digits: u32) -> String {
    borel_sweep_json(fixture, k_max, strategy, digits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soliton_curve_reconstructs_kink() {
        let json = soliton_curve_json("kink", 1.0, 5, 4.0, 33, 40);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v["error"].is_null(), "{json}");
        assert!(v["max_abs_error"].as_f64().unwrap() < 1e-10);
    }

    #[test]
    fn factor_explore_geometric() {
        let json = factor_explore_json("1, 1, 1", 2, 0.9, 17, 40);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["validity"], "flagged");
        assert!((v["exponent"].as_f64().unwrap() + 1.0).abs() < 1e-9);
        // resummed value at the right edge is close to 1/(1-x)
        let xs = v["x"].as_array().unwrap();
        let last_x = xs.last().unwrap().as_f64().unwrap();
        let last = v["resummed"].as_array().unwrap().last().unwrap().as_f64().unwrap();
        assert!((last - 1.0 / (1.0 - last_x)).abs() < 1e-6);
    }

    #[test]
    fn borel_sweep_partition_trend() {
        let json = borel_sweep_json("z_partition", 8, "fixed0", 40);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let rows = v["rows"].as_array().unwrap();
        assert!(rows.len() >= 6);
        let last_ok = rows.iter().rev().find(|r| r["status"] == "ok").unwrap();
        let nu = last_ok["nu"].as_f64().unwrap();
        assert!((nu + 0.25).abs() < 0.05, "nu = {nu}");
    }

    #[test]
    fn bad_inputs_produce_error_json() {
        let v: serde_json::Value =
            serde_json::from_str(&soliton_curve_json("sphere", 1.0, 5, 4.0, 32, 40)).unwrap();
        assert!(v["error"].is_string());
        let v: serde_json::Value =
            serde_json::from_str(&factor_explore_json("1,zebra,3", 2, 1.0, 32, 40)).unwrap();
        assert!(v["error"].is_string());
    }
}

use bcov_core::dynamics::{
    equilibrium, estimate_n_for_connectivity, estimate_stopping_time, expected_stopping_time_formula,
    population_trajectory, PconSequence, PopulationState,
};
use bcov_core::exact::{
    expected_components_uniform, expected_coverage_uniform, expected_edges_uniform, halfspace_cuboid_volume,
    pcon_cf_uniform, pcon_heterogeneous_uniform, pcon_per_slack_uniform, pcon_uniform, Halfspace, Hypercuboid,
};
use bcov_core::geometry::{d_regime, graph_stats, Configuration, ThresholdProfile};
use bcov_core::montecarlo::{
    estimate_graph_stats, estimate_halfspace_volume, estimate_pcon, estimate_pcon_heterogeneous,
    estimate_simplex_integral, hit_and_run_connected, sample_cf_config, sample_iid_config, ChainSettings, MonteCarlo,
    RngSpec, Scenario,
};
use bcov_core::parents::{order_statistic_cdf, order_statistic_cdf_exact, ParentDistribution, ParentSpec};
use bcov_core::polynomial::RationalPolynomial;
use bcov_core::renyi::{
    empirical_position_histogram, jamming_density_estimate, n_parking_sample, simulate_parking, simulate_parking_exact,
};
use bcov_core::scalar::{format_rational, parse_rational, parse_rational_list, Scalar};
use bcov_core::simplex::{pcon_polynomial_parent, SimplexND};
use bcov_core::{Error, Rational, Result};
use serde_json::{json, Value};

use crate::spec::*;

/// Trials used when a randomized command gets no `--trials`.
pub const DEFAULT_TRIALS: u64 = 100_000;

pub struct Context {
    pub seed: Option<u64>,
    pub stream: u64,
    pub trials: Option<u64>,
    pub workers: usize,
}

impl Context {
    fn rng(&self) -> Result<RngSpec> {
        match self.seed {
            Some(seed) => Ok(RngSpec::new(seed, self.stream)),
            None => usage("this command is randomized and needs --seed"),
        }
    }

    fn mc(&self) -> Result<MonteCarlo> {
        Ok(MonteCarlo::new(self.trials.unwrap_or(DEFAULT_TRIALS), self.rng()?).with_workers(self.workers))
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

fn need<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
    value.as_ref().ok_or_else(|| Error::Domain(format!("missing --{flag}")))
}

fn rational(value: &Option<String>, flag: &str) -> Result<Rational> {
    parse_rational(need(value, flag)?)
}

fn rational_list(value: &Option<String>, flag: &str) -> Result<Vec<Rational>> {
    parse_rational_list(need(value, flag)?)
}

fn floats(v: &[Rational]) -> Vec<f64> {
    v.iter().map(Scalar::to_f64).collect()
}

fn exact(r: &Rational) -> Value {
    json!({"exact": format_rational(r), "float": r.to_f64()})
}

fn combine(method: Method, exact: Option<Value>, estimate: Option<Value>) -> Value {
    match (method, exact, estimate) {
        (Method::Both, Some(e), Some(m)) => json!({"exact": e, "estimate": m}),
        (_, Some(e), None) => e,
        (_, None, Some(m)) => m,
        _ => Value::Null,
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

fn parent_or_uniform(parent: &Option<ParentSpec>, s: &Rational) -> Result<ParentDistribution> {
    match parent {
        Some(spec) => spec.clone().try_into(),
        None => ParentDistribution::uniform(s.clone()),
    }
}

pub fn run(command: &Command, ctx: &Context) -> Result<Value> {
    match command {
        Command::Pcon(a) => pcon(a, ctx),
        Command::Volume(a) => volume(a, ctx),
        Command::Expect(a) => expect(a, ctx),
        Command::Sample(a) => sample(a, ctx),
        Command::Mcmc(a) => mcmc(a, ctx),
        Command::Park(a) => park(a, ctx),
        Command::Dynamics(a) => dynamics(a, ctx),
        Command::Parents(a) => parents(a),
        Command::Stats(a) => stats(a),
    }
}

fn pcon(a: &PconArgs, ctx: &Context) -> Result<Value> {
    let s = rational(&a.s, "s")?;
    let parent = parent_or_uniform(&a.parent, &s)?;
    let r = a.r.as_ref().map(|t| parse_rational(t)).transpose()?;
    if let Some(ranges) = &a.ranges {
        let ranges = parse_rational_list(ranges)?;
        if r.is_some() {
            return usage("--ranges and --r cannot be combined");
        }
        let exact_value = if a.method.exact() {
            if !parent.is_uniform() {
                return usage("exact heterogeneous pcon needs the uniform parent; use --method mc");
            }
            Some(exact(&pcon_heterogeneous_uniform(&s, &ranges)?))
        } else {
            None
        };
        let estimate = if a.method.mc() {
            Some(to_value(&estimate_pcon_heterogeneous(&parent, &floats(&ranges), s.to_f64(), &ctx.mc()?)?))
        } else {
            None
        };
        return Ok(combine(a.method, exact_value, estimate));
    }
    let n = *need(&a.n, "n")?;
    let profile = match (&a.d, &a.thresholds) {
        (Some(d), None) => ThresholdProfile::homogeneous(parse_rational(d)?)?,
        (None, Some(t)) => ThresholdProfile::per_slack(parse_rational_list(t)?)?,
        _ => return usage("give exactly one of --d or --thresholds"),
    };
    profile.check_len(n + 1)?;
    let exact_value = if a.method.exact() {
        let p = match (&profile, &r) {
            (ThresholdProfile::Homogeneous(d), Some(r)) => {
                if a.parent.is_some() {
                    return usage("exact collision-free pcon needs the uniform parent; use --method mc");
                }
                pcon_cf_uniform(&s, d, r, n)?
            }
            (ThresholdProfile::PerSlack(_), Some(_)) => return usage("--r needs a homogeneous --d"),
            (ThresholdProfile::Homogeneous(d), None) if parent.is_uniform() => pcon_uniform(&s, d, n)?,
            (ThresholdProfile::PerSlack(t), None) if parent.is_uniform() => pcon_per_slack_uniform(&s, t)?,
            (ThresholdProfile::Homogeneous(d), None) => match parent.as_polynomial() {
                Some(density) if parent.support() == &s => pcon_polynomial_parent(&density, &s, d, n)?,
                _ => return usage(format!("no exact route for a {} parent; use --method mc", parent.family())),
            },
            (ThresholdProfile::PerSlack(_), None) => {
                return usage("per-slack thresholds have an exact route only for the uniform parent")
            }
        };
        Some(exact(&p))
    } else {
        None
    };
    let estimate = if a.method.mc() {
        let profile_f = match &profile {
            ThresholdProfile::Homogeneous(d) => ThresholdProfile::homogeneous(d.to_f64())?,
            ThresholdProfile::PerSlack(t) => ThresholdProfile::per_slack(floats(t))?,
        };
        let scenario = match &r {
            Some(r) => {
                let parent = match &a.parent {
                    Some(spec) => spec.clone().try_into()?,
                    None => ParentDistribution::uniform(&s - r)?,
                };
                Scenario::CollisionFree { parent, diameter: r.to_f64() }
            }
            None => Scenario::Iid(parent),
        };
        Some(to_value(&estimate_pcon(&scenario, s.to_f64(), &profile_f, n, &ctx.mc()?)?))
    } else {
        None
    };
    Ok(combine(a.method, exact_value, estimate))
}

/// Parses "e1,e2:c;e1,e2:c" into a polynomial in `vars` variables.
fn parse_poly(text: &str, vars: usize) -> Result<RationalPolynomial> {
    let mut terms = Vec::new();
    for term in text.split(';').filter(|t| !t.trim().is_empty()) {
        let Some((exps, coef)) = term.split_once(':') else {
            return usage(format!("polynomial term {term:?} is not \"exponents:coefficient\""));
        };
        let exps = exps
            .split(',')
            .map(|e| e.trim().parse::<u32>().map_err(|_| Error::Domain(format!("bad exponent in {term:?}"))))
            .collect::<Result<Vec<u32>>>()?;
        terms.push((exps, parse_rational(coef)?));
    }
    RationalPolynomial::from_terms(vars, terms)
}

fn volume(a: &VolumeArgs, ctx: &Context) -> Result<Value> {
    if let Some(text) = &a.simplex {
        let vertices = text.split(';').map(parse_rational_list).collect::<Result<Vec<_>>>()?;
        let simplex = SimplexND::new(vertices)?;
        let poly = match &a.poly {
            Some(p) => parse_poly(p, simplex.dim())?,
            None => RationalPolynomial::one(simplex.dim()),
        };
        let exact_value = if a.method.exact() {
            Some(exact(&bcov_core::simplex::integrate_over_simplex(&poly, &simplex)?))
        } else {
            None
        };
        let estimate = if a.method.mc() { Some(to_value(&estimate_simplex_integral(&poly, &simplex, &ctx.mc()?)?)) } else { None };
        return Ok(combine(a.method, exact_value, estimate));
    }
    let hs = Halfspace::new(rational_list(&a.a, "a")?, rational(&a.b, "b")?)?;
    let cuboid = match &a.cuboid {
        Some(c) => Hypercuboid::new(parse_rational_list(c)?)?,
        None => Hypercuboid::unit(hs.dim()),
    };
    let exact_value = if a.method.exact() { Some(exact(&halfspace_cuboid_volume(&hs, &cuboid)?)) } else { None };
    let estimate = if a.method.mc() { Some(to_value(&estimate_halfspace_volume(&hs, &cuboid, &ctx.mc()?)?)) } else { None };
    Ok(combine(a.method, exact_value, estimate))
}

fn expect(a: &ExpectArgs, ctx: &Context) -> Result<Value> {
    let (s, d, n) = (rational(&a.s, "s")?, rational(&a.d, "d")?, *need(&a.n, "n")?);
    let parent = parent_or_uniform(&a.parent, &s)?;
    let exact_value = if a.method.exact() {
        if !parent.is_uniform() {
            return usage("exact expectations need the uniform parent; use --method mc");
        }
        Some(json!({
            "components": exact(&expected_components_uniform(&s, &d, n)?),
            "coverage": exact(&expected_coverage_uniform(&s, &d, n)?),
            "edges": exact(&expected_edges_uniform(&s, &d, n)?),
        }))
    } else {
        None
    };
    let estimate = if a.method.mc() {
        Some(to_value(&estimate_graph_stats(&parent, s.to_f64(), d.to_f64(), n, &ctx.mc()?)?))
    } else {
        None
    };
    Ok(combine(a.method, exact_value, estimate))
}

fn sample(a: &SampleArgs, ctx: &Context) -> Result<Value> {
    let (s, n) = (rational(&a.s, "s")?, *need(&a.n, "n")?);
    let mut rng = ctx.rng()?.rng();
    let count = a.count.unwrap_or(1);
    let configs = match &a.r {
        Some(r) => {
            let r = parse_rational(r)?;
            let parent = match &a.parent {
                Some(spec) => spec.clone().try_into()?,
                None => ParentDistribution::uniform(&s - &r)?,
            };
            (0..count)
                .map(|_| sample_cf_config(&parent, s.to_f64(), r.to_f64(), n, &mut rng))
                .collect::<Result<Vec<_>>>()?
        }
        None => {
            let parent = parent_or_uniform(&a.parent, &s)?;
            (0..count).map(|_| sample_iid_config(&parent, s.to_f64(), n, &mut rng)).collect::<Result<Vec<_>>>()?
        }
    };
    let positions: Vec<&[f64]> = configs.iter().map(|c| c.positions()).collect();
    Ok(json!({ "configurations": positions }))
}

fn mcmc(a: &McmcArgs, ctx: &Context) -> Result<Value> {
    let (s, n) = (rational(&a.s, "s")?.to_f64(), *need(&a.n, "n")?);
    let profile = match (&a.d, &a.thresholds) {
        (Some(d), None) => ThresholdProfile::homogeneous(parse_rational(d)?.to_f64())?,
        (None, Some(t)) => ThresholdProfile::per_slack(floats(&parse_rational_list(t)?))?,
        _ => return usage("give exactly one of --d or --thresholds"),
    };
    let settings = ChainSettings { burn_in: a.burn_in, thin: a.thin };
    let mut rng = ctx.rng()?.rng();
    let slacks = hit_and_run_connected(s, &profile, n, settings, a.count.unwrap_or(1), &mut rng)?;
    Ok(json!({ "slacks": slacks }))
}

fn park(a: &ParkArgs, ctx: &Context) -> Result<Value> {
    let s = rational(&a.s, "s")?;
    let r = match &a.r {
        Some(r) => parse_rational(r)?,
        None => Rational::from_u64(1),
    };
    if let Some(n) = a.n {
        let config = n_parking_sample(s.to_f64(), r.to_f64(), n, &mut ctx.rng()?.rng())?;
        return Ok(json!({ "positions": config.positions() }));
    }
    if a.exact {
        let run = simulate_parking_exact(&s, &r, &mut ctx.rng()?.rng())?;
        let mut out = json!({"count": run.count, "density": run.density});
        if a.positions {
            out["positions"] = run.positions.iter().map(format_rational).collect();
        }
        return Ok(out);
    }
    if ctx.trials.is_some() {
        let mc = ctx.mc()?;
        let mut out = json!({ "density": jamming_density_estimate(s.to_f64(), r.to_f64(), &mc)? });
        if let Some(bins) = a.bins {
            out["histogram"] = to_value(&empirical_position_histogram(s.to_f64(), r.to_f64(), bins, &mc)?);
        }
        return Ok(out);
    }
    if a.bins.is_some() {
        return usage("--bins needs --trials");
    }
    let run = simulate_parking(s.to_f64(), r.to_f64(), &mut ctx.rng()?.rng())?;
    let mut out = json!({"count": run.count, "density": run.density});
    if a.positions {
        out["positions"] = json!(run.positions);
    }
    Ok(out)
}

fn dynamics(a: &DynamicsArgs, ctx: &Context) -> Result<Value> {
    let mut out = serde_json::Map::new();
    if let Some(rates) = &a.rates {
        let rates = parse_rational_list(rates)?;
        let [r_ad, r_da] = rates.as_slice() else {
            return usage("--rates takes two values: r_ad,r_da");
        };
        let total = rational(&a.total, "total")?;
        let eq = equilibrium(total.clone(), r_ad.clone(), r_da.clone())?;
        out.insert("equilibrium".into(), json!({"attached": exact(&eq.attached), "detached": exact(&eq.detached)}));
        if let Some(t) = a.t {
            let attached = match &a.attached {
                Some(x) => parse_rational(x)?,
                None => Rational::from_u64(0),
            };
            if attached > total {
                return usage("--attached exceeds --total");
            }
            let start = PopulationState::new(
                attached.to_f64(),
                (&total - &attached).to_f64(),
                r_ad.to_f64(),
                r_da.to_f64(),
            )?;
            let now = population_trajectory(&start, t)?;
            out.insert("state".into(), json!({"t": t, "attached": now.attached, "detached": now.detached}));
        }
    } else if a.t.is_some() || a.total.is_some() || a.attached.is_some() {
        return usage("population options need --rates");
    }
    if let Some(c) = a.d_over_s {
        out.insert("connectivity_size".into(), to_value(&estimate_n_for_connectivity(c)?));
    }
    if let Some(horizon) = a.horizon {
        let (s, d) = (rational(&a.s, "s")?, rational(&a.d, "d")?);
        let seq = PconSequence::uniform(&s, &d, horizon + 1)?;
        out.insert("stopping_formula".into(), to_value(&expected_stopping_time_formula(&seq, horizon)?));
        if a.simulate {
            let parent = ParentDistribution::uniform(s.clone())?;
            let est = estimate_stopping_time(&parent, s.to_f64(), d.to_f64(), horizon, 10_000_000, &ctx.mc()?)?;
            out.insert("stopping_simulation".into(), to_value(&est));
        }
    } else if a.simulate || a.s.is_some() || a.d.is_some() {
        return usage("stopping-time options need --horizon");
    }
    if out.is_empty() {
        return usage("nothing to do: give --rates, --d-over-s or --horizon");
    }
    Ok(Value::Object(out))
}

fn parents(a: &ParentsArgs) -> Result<Value> {
    let spec = need(&a.parent, "parent")?.clone();
    let parent: ParentDistribution = spec.clone().try_into()?;
    let mut out = json!({
        "parent": spec,
        "family": parent.family(),
        "support": format_rational(parent.support()),
    });
    if let Some(at) = &a.at {
        let points = parse_rational_list(at)?;
        let rows = points
            .iter()
            .map(|t| {
                let mut row = json!({
                    "t": format_rational(t),
                    "pdf": parent.pdf_at(t.to_f64())?,
                    "cdf": parent.cdf_at(t.to_f64())?,
                });
                if parent.is_exact() {
                    row["pdf_exact"] = json!(format_rational(&parent.pdf_exact(t)?));
                    row["cdf_exact"] = json!(format_rational(&parent.cdf_exact(t)?));
                }
                if let (Some(n), Some(k)) = (a.n, a.k) {
                    row["orderstat_cdf"] = json!(order_statistic_cdf(&parent, n, k, t.to_f64())?);
                    if parent.is_exact() {
                        row["orderstat_cdf_exact"] = json!(format_rational(&order_statistic_cdf_exact(&parent, n, k, t)?));
                    }
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        out["points"] = json!(rows);
    } else if a.n.is_some() || a.k.is_some() {
        return usage("--n/--k need --at points");
    }
    if let Some(q) = &a.quantiles {
        let levels = floats(&parse_rational_list(q)?);
        let xs = levels.iter().map(|u| parent.inverse_cdf(*u)).collect::<Result<Vec<_>>>()?;
        out["quantiles"] = json!(levels.iter().zip(xs).map(|(u, x)| json!({"u": u, "x": x})).collect::<Vec<_>>());
    }
    Ok(out)
}

fn stats(a: &StatsArgs) -> Result<Value> {
    let (s, d) = (rational(&a.s, "s")?, rational(&a.d, "d")?);
    let positions = rational_list(&a.positions, "positions")?;
    let n = positions.len();
    let config = Configuration::from_unsorted(s.clone(), positions)?;
    let st = graph_stats(&config, &d);
    Ok(json!({
        "connected": st.connected,
        "components": st.components,
        "coverage": exact(&st.coverage),
        "edges": st.edges,
        "regime": d_regime(&s, &d, n),
        "slacks": config.slacks().iter().map(format_rational).collect::<Vec<_>>(),
    }))
}

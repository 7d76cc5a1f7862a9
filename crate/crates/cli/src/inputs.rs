use std::path::Path;

use emeter_core::states::{PreparedState, StateSpec};
use emeter_core::{Error, MatC};

use crate::CliError;

/// Accepts a JSON literal, a shorthand name or a path to a JSON file.
pub fn resolve_state(arg: &str) -> Result<(StateSpec, PreparedState), CliError> {
    let spec = match shorthand(arg) {
        Some(spec) => spec,
        None => serde_json::from_str(&read_json_arg(arg)?).map_err(Error::from)?,
    };
    let prepared = spec.prepare()?;
    Ok((spec, prepared))
}

fn shorthand(name: &str) -> Option<StateSpec> {
    Some(match name {
        "bell" | "phi_plus" => StateSpec::MaxEntangled { d: 2 },
        "singlet" => StateSpec::Werner { d: 2, x: 0.0 },
        "product" => StateSpec::PureSchmidt {
            lambdas: vec![1.0, 0.0],
        },
        _ => return None,
    })
}

fn read_json_arg(arg: &str) -> Result<String, CliError> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        return Ok(arg.to_string());
    }
    let path = Path::new(arg);
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

#[derive(serde::Deserialize)]
struct MatrixLiteral {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Vec<Vec<f64>>,
}

/// `swap` (the flip operator on d x d) or a JSON `{"re": [[..]], "im": [[..]]}`
/// literal or file.
pub fn resolve_witness(arg: &str, d: Option<usize>) -> Result<MatC, CliError> {
    if arg == "swap" {
        let d = d.ok_or_else(|| {
            Error::mismatch("swap witness", "dA = dB", "unequal local dimensions")
        })?;
        return Ok(emeter_core::states::swap_operator(d).matrix().clone());
    }
    let lit: MatrixLiteral = serde_json::from_str(&read_json_arg(arg)?).map_err(Error::from)?;
    let im = if lit.im.is_empty() {
        lit.re.iter().map(|r| vec![0.0; r.len()]).collect()
    } else {
        lit.im
    };
    Ok(MatC::from_real_imag(&lit.re, &im)?)
}

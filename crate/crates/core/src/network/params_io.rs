//! Versioned decimal-text serialization of a parameter block.
//!
//! Format (line oriented, LF endings):
//!
//! ```text
//! mlbcd-params v1
//! input_dim 2
//! output_dim 1
//! hidden 100 100 100
//! activations sfm:0.5 tanh tanh identity
//! scaling learnable:20
//! count 30701
//! <one parameter per line, 17 significant digits>
//! ```

use super::{Activation, InputScaling, ParamBlock, SubNetwork};
use crate::error::{Error, Result};
use std::io::{BufRead, Write};

const MAGIC: &str = "mlbcd-params v1";

fn activation_token(a: &Activation) -> String {
    match a {
        Activation::Tanh => "tanh".into(),
        Activation::S2Relu => "s2relu".into(),
        Activation::Identity => "identity".into(),
        Activation::Sfm { relax } => format!("sfm:{relax}"),
    }
}

fn parse_activation(tok: &str, line: usize) -> Result<Activation> {
    if let Some(r) = tok.strip_prefix("sfm:") {
        let relax: f64 = r.parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad SFM relaxation {r:?}"),
        })?;
        return Ok(Activation::Sfm { relax });
    }
    match tok {
        "tanh" => Ok(Activation::Tanh),
        "s2relu" => Ok(Activation::S2Relu),
        "identity" => Ok(Activation::Identity),
        other => Err(Error::Parse { line, message: format!("unknown activation {other:?}") }),
    }
}

fn scaling_token(s: &InputScaling) -> String {
    match s {
        InputScaling::None => "none".into(),
        InputScaling::Learnable { init_std } => format!("learnable:{init_std}"),
        InputScaling::Fixed(values) => {
            let vals: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
            format!("fixed:{}", vals.join(","))
        }
    }
}

fn parse_scaling(tok: &str, line: usize) -> Result<InputScaling> {
    if tok == "none" {
        return Ok(InputScaling::None);
    }
    if let Some(s) = tok.strip_prefix("learnable:") {
        let init_std: f64 = s.parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad scaling deviation {s:?}"),
        })?;
        if init_std < 0.0 || !init_std.is_finite() {
            return Err(Error::Parse { line, message: "scaling deviation must be finite and non-negative".into() });
        }
        return Ok(InputScaling::Learnable { init_std });
    }
    if let Some(s) = tok.strip_prefix("fixed:") {
        let values: Vec<f64> = s
            .split(',')
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse { line, message: format!("bad fixed scaling list {s:?}") })?;
        return Ok(InputScaling::Fixed(values));
    }
    Err(Error::Parse { line, message: format!("unknown scaling {tok:?}") })
}

pub fn save_params<W: Write>(net: &SubNetwork, params: &ParamBlock, mut out: W) -> Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "input_dim {}", net.input_dim())?;
    writeln!(out, "output_dim {}", net.output_dim())?;
    let widths: Vec<String> = net.hidden_widths().iter().map(|w| w.to_string()).collect();
    writeln!(out, "hidden {}", widths.join(" "))?;
    let acts: Vec<String> = net.activations().iter().map(activation_token).collect();
    writeln!(out, "activations {}", acts.join(" "))?;
    writeln!(out, "scaling {}", scaling_token(net.scaling()))?;
    writeln!(out, "count {}", params.len())?;
    for v in params.as_slice() {
        writeln!(out, "{v:.16e}")?;
    }
    Ok(())
}

pub fn load_params<R: BufRead>(input: R) -> Result<(SubNetwork, ParamBlock)> {
    let mut lines = input.lines().enumerate();
    let mut next = |expected: &'static str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((i, Err(e))) => Err(Error::Parse { line: i + 1, message: e.to_string() }),
            None => Err(Error::Parse { line: 0, message: format!("missing {expected}") }),
        }
    };

    let (line, magic) = next("header")?;
    if magic.trim() != MAGIC {
        return Err(Error::Parse { line, message: format!("expected {MAGIC:?}") });
    }

    let field = |line: usize, text: &str, key: &str| -> Result<String> {
        match text.trim().strip_prefix(key) {
            Some(rest) if rest.starts_with(' ') || rest.is_empty() => Ok(rest.trim().to_string()),
            _ => Err(Error::Parse { line, message: format!("expected field {key:?}") }),
        }
    };

    let (l, t) = next("input_dim")?;
    let input_dim: usize = field(l, &t, "input_dim")?
        .parse()
        .map_err(|_| Error::Parse { line: l, message: "bad input_dim".into() })?;
    let (l, t) = next("output_dim")?;
    let output_dim: usize = field(l, &t, "output_dim")?
        .parse()
        .map_err(|_| Error::Parse { line: l, message: "bad output_dim".into() })?;
    if input_dim == 0 || output_dim == 0 {
        return Err(Error::Parse { line: l, message: "dimensions must be positive".into() });
    }
    let (l, t) = next("hidden")?;
    let hidden: Vec<usize> = field(l, &t, "hidden")?
        .split_whitespace()
        .map(|w| w.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse { line: l, message: "bad hidden widths".into() })?;
    if hidden.iter().any(|&w| w == 0) {
        return Err(Error::Parse { line: l, message: "hidden widths must be positive".into() });
    }
    let (l, t) = next("activations")?;
    let acts: Vec<Activation> = field(l, &t, "activations")?
        .split_whitespace()
        .map(|tok| parse_activation(tok, l))
        .collect::<Result<_>>()?;
    let (l, t) = next("scaling")?;
    let scaling = parse_scaling(&field(l, &t, "scaling")?, l)?;
    let (l, t) = next("count")?;
    let count: usize = field(l, &t, "count")?
        .parse()
        .map_err(|_| Error::Parse { line: l, message: "bad count".into() })?;

    let net = SubNetwork::new(input_dim, hidden, output_dim, acts, scaling)
        .map_err(|e| Error::Parse { line: l, message: e.to_string() })?;
    if net.param_count() != count {
        return Err(Error::Parse {
            line: l,
            message: format!("count {} does not match architecture ({})", count, net.param_count()),
        });
    }

    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let (l, t) = next("parameter value")?;
        let v: f64 = t
            .trim()
            .parse()
            .map_err(|_| Error::Parse { line: l, message: format!("bad value {t:?}") })?;
        values.push(v);
    }
    Ok((net, ParamBlock(values)))
}

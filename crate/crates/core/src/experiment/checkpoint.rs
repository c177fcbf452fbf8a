//! Text checkpoints: an architecture header followed by one flat array per tensor.
//!
//! ```text
//! cosmos-checkpoint 1
//! conditioned true
//! objectives 2
//! layers 4 60 25 1
//! heads 1
//! w0 <in*out values, row-major in x out>
//! b0 <out values>
//! ...
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::nn::{Matrix, Mlp, OutputHeads};
use crate::train::TrainedModel;
use crate::{Error, Result};

const MAGIC: &str = "cosmos-checkpoint 1";

fn join(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 20);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v}").expect("writing to a String cannot fail");
    }
    s
}

/// Serializes a model. Floats use their shortest exact decimal form.
pub fn checkpoint_to_string(model: &TrainedModel) -> String {
    let mlp = model.mlp();
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    writeln!(out, "conditioned {}", model.conditioned()).unwrap();
    writeln!(out, "objectives {}", model.num_objectives()).unwrap();
    let dims: Vec<String> = mlp.layer_dims().iter().map(usize::to_string).collect();
    writeln!(out, "layers {}", dims.join(" ")).unwrap();
    let heads: Vec<String> = mlp.heads().widths().iter().map(usize::to_string).collect();
    writeln!(out, "heads {}", heads.join(" ")).unwrap();
    for (k, (w, b)) in mlp.weights().iter().zip(mlp.biases()).enumerate() {
        writeln!(out, "w{k} {}", join(w.as_slice())).unwrap();
        writeln!(out, "b{k} {}", join(b)).unwrap();
    }
    out
}

fn field<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<Vec<&'a str>> {
    let line = lines
        .next()
        .ok_or_else(|| Error::Data(format!("checkpoint ends before `{key}`")))?;
    let mut parts = line.split_ascii_whitespace();
    if parts.next() != Some(key) {
        return Err(Error::Data(format!("checkpoint line `{line}` should start with `{key}`")));
    }
    Ok(parts.collect())
}

fn numbers<T: std::str::FromStr>(parts: &[&str], key: &str) -> Result<Vec<T>> {
    parts
        .iter()
        .map(|p| {
            p.parse::<T>()
                .map_err(|_| Error::Data(format!("checkpoint `{key}`: bad value `{p}`")))
        })
        .collect()
}

pub fn checkpoint_from_str(text: &str) -> Result<TrainedModel> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(Error::Data("not a cosmos checkpoint".into()));
    }
    let conditioned = match field(&mut lines, "conditioned")?.as_slice() {
        ["true"] => true,
        ["false"] => false,
        other => return Err(Error::Data(format!("bad `conditioned` value {other:?}"))),
    };
    let objectives: Vec<usize> = numbers(&field(&mut lines, "objectives")?, "objectives")?;
    let [objectives] = objectives[..] else {
        return Err(Error::Data("`objectives` takes one value".into()));
    };
    let dims: Vec<usize> = numbers(&field(&mut lines, "layers")?, "layers")?;
    let heads = OutputHeads::new(numbers(&field(&mut lines, "heads")?, "heads")?)?;
    if dims.len() < 2 {
        return Err(Error::Data("checkpoint needs at least two layer sizes".into()));
    }
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for (k, pair) in dims.windows(2).enumerate() {
        let wkey = format!("w{k}");
        let w: Vec<f64> = numbers(&field(&mut lines, &wkey)?, &wkey)?;
        weights.push(Matrix::from_vec(pair[0], pair[1], w)?);
        let bkey = format!("b{k}");
        let b: Vec<f64> = numbers(&field(&mut lines, &bkey)?, &bkey)?;
        if b.len() != pair[1] {
            return Err(Error::Data(format!("`{bkey}` has {} values, expected {}", b.len(), pair[1])));
        }
        biases.push(b);
    }
    if let Some(extra) = lines.next() {
        return Err(Error::Data(format!("unexpected checkpoint line `{extra}`")));
    }
    let mlp = Mlp::from_parameters(weights, biases, heads)?;
    TrainedModel::new(mlp, conditioned, objectives)
}

pub fn write_checkpoint(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, checkpoint_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&text)
}

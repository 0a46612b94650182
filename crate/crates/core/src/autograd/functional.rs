use super::{Tape, Var};
use crate::{Error, Result};

/// `x·w + b` for a row-major batch `x` (`m×in`), `w` (`in×out`), `b` (`out`).
pub fn dense(tape: &mut Tape, x: Var, weight: Var, bias: Var) -> Result<Var> {
    let y = tape.matmul(x, weight)?;
    tape.add_row_bias(y, bias)
}

/// Row-normalised attention weights `softmax(q·kᵀ/√d)`, shape `T_q×T_k`.
pub fn attention_weights(tape: &mut Tape, query: Var, key: Var) -> Result<Var> {
    let (qs, ks) = (tape.shape(query).to_vec(), tape.shape(key).to_vec());
    let (&[t_q, d], &[t_k, d_k]) = (&qs[..], &ks[..]) else {
        return Err(Error::dim(format!(
            "attention: query {qs:?} and key {ks:?} must be matrices"
        )));
    };
    if d == 0 || d != d_k {
        return Err(Error::dim(format!(
            "attention: query {qs:?} and key {ks:?} must share a positive feature dimension"
        )));
    }
    if t_q == 0 || t_k == 0 {
        return Err(Error::dim("attention: empty token axis"));
    }
    let kt = tape.transpose(key)?;
    let scores = tape.matmul(query, kt)?;
    let scaled = tape.scale(scores, 1.0 / (d as f64).sqrt());
    tape.softmax(scaled, 1)
}

/// `softmax(q·kᵀ/√d)·v`.
pub fn scaled_dot_product_attention(tape: &mut Tape, query: Var, key: Var, value: Var) -> Result<Var> {
    let t_k = tape.shape(key).first().copied();
    let t_v = tape.shape(value).first().copied();
    if tape.shape(value).len() != 2 || t_k != t_v {
        return Err(Error::dim(format!(
            "attention: key {:?} and value {:?} must share the token axis",
            tape.shape(key),
            tape.shape(value)
        )));
    }
    let weights = attention_weights(tape, query, key)?;
    tape.matmul(weights, value)
}

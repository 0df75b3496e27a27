//! Binary dump of factors.
//!
//! Layout, all little-endian: `M`, `N`, `k` as `u64`, then `σ` (`k` × `f64`),
//! `U` row-major (`M·k` × `f64`), `V` row-major (`N·k` × `f64`).
//! Fast factors are materialized on save and load back as dense.

use std::io::{Read, Write};

use super::{Factor, FactoredMatrix};
use crate::{Error, Result};

pub fn save_factors<W: Write>(a: &FactoredMatrix, mut w: W) -> Result<()> {
    let k = a.sigma().len();
    for d in [a.m(), a.n(), k] {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    let mut put = |xs: &[f64]| -> Result<()> {
        for x in xs {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    };
    put(a.sigma())?;
    put(&a.u().to_dense())?;
    put(&a.v().to_dense())?;
    Ok(())
}

pub fn load_factors<R: Read>(mut r: R) -> Result<FactoredMatrix> {
    let mut buf = [0u8; 8];
    let mut dim = || -> Result<usize> {
        r.read_exact(&mut buf)?;
        usize::try_from(u64::from_le_bytes(buf))
            .map_err(|_| Error::InvalidParameter("dimension does not fit in usize".into()))
    };
    let (m, n, k) = (dim()?, dim()?, dim()?);
    if k > m.min(n) {
        return Err(Error::InvalidParameter(format!("rank {k} exceeds min({m}, {n})")));
    }
    let mut read = |len: usize| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            r.read_exact(&mut buf)?;
            out.push(f64::from_le_bytes(buf));
        }
        Ok(out)
    };
    let sigma = read(k)?;
    let u = read(m * k)?;
    let v = read(n * k)?;
    FactoredMatrix::new(
        sigma,
        Factor::Dense { rows: m, cols: k, data: u },
        Factor::Dense { rows: n, cols: k, data: v },
    )
}

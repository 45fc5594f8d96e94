//! Field export: full binary dumps and CSV slices.
//!
//! Binary layout (all integers and floats little-endian):
//!
//! | bytes | content |
//! |---|---|
//! | 4 | magic `SPKF` |
//! | 2 | format version `u16` (= 1) |
//! | 1 | dimension `n` (`u8`, 2..=4) |
//! | 1 | boundary flags (bit 0: physical face Dirichlet, bit 1: truncation faces Dirichlet) |
//! | 4n | node counts per axis (`u32`) |
//! | 8·Σdims | node coordinates per axis (`f64`), axis 0 first |
//! | 8·Πdims | nodal values (`f64`), row-major, normal axis fastest |

use super::assemble::{Boundary, FaceKind};
use super::grid::{Grid, MAX_NODES};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SPKF";
const VERSION: u16 = 1;

/// A decoded field dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub axes: Vec<Vec<f64>>,
    pub bc: Boundary,
    pub values: Vec<f64>,
}

/// Encode nodal values on `grid` as a binary dump.
pub fn encode(grid: &Grid, bc: Boundary, values: &[f64]) -> Result<Vec<u8>> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} values for {} nodes", values.len(), grid.len())));
    }
    let mut out = Vec::with_capacity(8 + 4 * grid.n + 8 * (grid.axes.iter().map(|a| a.len()).sum::<usize>() + values.len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(grid.n as u8);
    let flags = u8::from(bc.physical == FaceKind::Dirichlet) | (u8::from(bc.truncation == FaceKind::Dirichlet) << 1);
    out.push(flags);
    for d in &grid.dims {
        out.extend_from_slice(&(*d as u32).to_le_bytes());
    }
    for ax in &grid.axes {
        for v in ax {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(k).filter(|e| *e <= self.buf.len()).ok_or_else(|| Error::Format("truncated field dump".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn f64(&mut self) -> Result<f64> {
        let v = f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Format("non-finite value in field dump".into()))
        }
    }
}

/// Decode a binary dump, validating every header field.
pub fn decode(bytes: &[u8]) -> Result<FieldDump> {
    let mut rd = Reader { buf: bytes, pos: 0 };
    if rd.take(4)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes(rd.take(2)?.try_into().expect("2 bytes"));
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = rd.take(1)?[0] as usize;
    if !(2..=4).contains(&n) {
        return Err(Error::Format(format!("dimension {n} outside 2..=4")));
    }
    let flags = rd.take(1)?[0];
    if flags > 3 {
        return Err(Error::Format(format!("unknown boundary flags {flags:#x}")));
    }
    let kind = |b: bool| if b { FaceKind::Dirichlet } else { FaceKind::Neumann };
    let bc = Boundary { physical: kind(flags & 1 == 1), truncation: kind(flags & 2 == 2) };
    let mut dims = Vec::with_capacity(n);
    let mut total: usize = 1;
    for _ in 0..n {
        let d = u32::from_le_bytes(rd.take(4)?.try_into().expect("4 bytes")) as usize;
        if d < 2 {
            return Err(Error::Format(format!("axis with {d} nodes")));
        }
        total = total.checked_mul(d).filter(|t| *t <= MAX_NODES).ok_or_else(|| Error::Format("node count exceeds cap".into()))?;
        dims.push(d);
    }
    let expected = 8 + 4 * n + 8 * (dims.iter().sum::<usize>() + total);
    if bytes.len() != expected {
        return Err(Error::Format(format!("dump has {} bytes, header implies {expected}", bytes.len())));
    }
    let mut axes = Vec::with_capacity(n);
    for d in &dims {
        let ax = (0..*d).map(|_| rd.f64()).collect::<Result<Vec<f64>>>()?;
        if ax.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Format("axis coordinates not strictly increasing".into()));
        }
        axes.push(ax);
    }
    let values = (0..total).map(|_| rd.f64()).collect::<Result<Vec<f64>>>()?;
    Ok(FieldDump { axes, bc, values })
}

/// CSV slice through the grid: axes listed in `fixed` are held at the node
/// nearest the given coordinate; the remaining axes vary. Columns are the
/// free coordinates `y<k>` (1-based) followed by `value`.
pub fn slice_csv(grid: &Grid, values: &[f64], fixed: &[(usize, f64)]) -> Result<String> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} values for {} nodes", values.len(), grid.len())));
    }
    let n = grid.n;
    let mut pin: Vec<Option<usize>> = vec![None; n];
    for &(a, c) in fixed {
        if a >= n {
            return Err(Error::InvalidParams(format!("slice axis {a} >= n")));
        }
        let ax = &grid.axes[a];
        let k = (0..ax.len()).min_by(|&i, &j| (ax[i] - c).abs().total_cmp(&(ax[j] - c).abs())).expect("non-empty axis");
        pin[a] = Some(k);
    }
    let free: Vec<usize> = (0..n).filter(|a| pin[*a].is_none()).collect();
    let mut out = String::new();
    for a in &free {
        out.push_str(&format!("y{},", a + 1));
    }
    out.push_str("value\n");
    let mut m = vec![0usize; n];
    for idx in 0..grid.len() {
        grid.multi(idx, &mut m);
        if (0..n).any(|a| pin[a].is_some_and(|k| k != m[a])) {
            continue;
        }
        for a in &free {
            out.push_str(&format!("{:.12e},", grid.axes[*a][m[*a]]));
        }
        out.push_str(&format!("{:.12e}\n", values[idx]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::AxisSpec;

    fn grid() -> Grid {
        Grid::graded(3, 1.0, AxisSpec { h0: 0.25, core: 0.25, ratio: 1.5 }).unwrap()
    }

    #[test]
    fn roundtrip() {
        let g = grid();
        let vals: Vec<f64> = (0..g.len()).map(|i| i as f64 * 0.5 - 3.0).collect();
        let bytes = encode(&g, Boundary::DIRICHLET, &vals).unwrap();
        let d = decode(&bytes).unwrap();
        assert_eq!(d.values, vals);
        assert_eq!(d.axes, g.axes);
        assert_eq!(d.bc, Boundary::DIRICHLET);
    }

    #[test]
    fn rejects_corruption() {
        let g = grid();
        let vals = vec![1.0; g.len()];
        let bytes = encode(&g, Boundary::NEUMANN, &vals).unwrap();
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut bad = bytes.clone();
        bad[8] = 0xff;
        bad[9] = 0xff;
        bad[10] = 0xff;
        bad[11] = 0x7f;
        assert!(decode(&bad).is_err());
        assert!(decode(&[]).is_err());
    }

    #[test]
    fn slice_has_expected_rows() {
        let g = grid();
        let vals = vec![2.0; g.len()];
        let csv = slice_csv(&g, &vals, &[(1, 0.0)]).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "y1,y3,value");
        assert_eq!(lines.len(), 1 + g.dims[0] * g.dims[2]);
    }
}

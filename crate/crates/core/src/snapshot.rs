//! Field snapshots.
//!
//! Binary layout (all integers and floats little-endian):
//!
//! | bytes            | content                                   |
//! |------------------|-------------------------------------------|
//! | 8                | magic `MAGSNAP\0`                         |
//! | u32              | format version (1)                        |
//! | u32              | grid dimension D                          |
//! | u32              | components per node C                     |
//! | D × (u64, f64)   | node count and extent per axis            |
//! | u64              | RNG seed                                  |
//! | u32 + bytes      | UTF-8 metadata (free-form `key=value` lines) |
//! | u64              | slab count S                              |
//! | S × (f64, data)  | slab time, then nodes × C values, row-major, last axis fastest |
//!
//! CSV snapshots carry the same header as `#` comment lines followed by
//! `slab,time,x[,y],c0,...` rows.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid_pde::{Axis, ControlDensity, DirectorField, Field, Grid, NodeValue, NORM_TOL};
use crate::{Vec2, Vec3};

const MAGIC: &[u8; 8] = b"MAGSNAP\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Slab {
    pub time: f64,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub axes: Vec<Axis>,
    pub components: usize,
    pub seed: u64,
    pub meta: String,
    pub slabs: Vec<Slab>,
}

fn flatten<V: NodeValue>(values: &[V]) -> Vec<f64> {
    values
        .iter()
        .flat_map(|v| (0..V::COMPONENTS).map(move |c| v.component(c)))
        .collect()
}

impl Snapshot {
    pub fn new(grid: &Grid, components: usize, seed: u64, meta: impl Into<String>) -> Self {
        Self {
            axes: grid.axes().to_vec(),
            components,
            seed,
            meta: meta.into(),
            slabs: Vec::new(),
        }
    }

    pub fn of_director(grid: &Grid, time: f64, d: &DirectorField, seed: u64, meta: impl Into<String>) -> Self {
        let mut s = Self::new(grid, 3, seed, meta);
        s.slabs.push(Slab {
            time,
            data: flatten(d),
        });
        s
    }

    /// Control trajectory, slab n at `times[n]`.
    pub fn of_controls(grid: &Grid, times: &[f64], u: &[ControlDensity], seed: u64, meta: impl Into<String>) -> Self {
        let mut s = Self::new(grid, 2, seed, meta);
        s.slabs = times
            .iter()
            .zip(u)
            .map(|(&time, c)| Slab {
                time,
                data: flatten(c.field()),
            })
            .collect();
        s
    }

    pub fn push<V: NodeValue>(&mut self, time: f64, values: &[V]) -> Result<()> {
        if V::COMPONENTS != self.components {
            return Err(Error::Format(format!(
                "snapshot holds {} components, got {}",
                self.components,
                V::COMPONENTS
            )));
        }
        self.slabs.push(Slab {
            time,
            data: flatten(values),
        });
        Ok(())
    }

    fn check_grid(&self, grid: &Grid, components: usize) -> Result<()> {
        if self.axes != grid.axes() {
            return Err(Error::Format("snapshot grid does not match the run grid".into()));
        }
        if self.components != components {
            return Err(Error::Format(format!(
                "snapshot has {} components, expected {components}",
                self.components
            )));
        }
        Ok(())
    }

    fn field<V: NodeValue>(&self, grid: &Grid, slab: usize) -> Result<Field<V>> {
        self.check_grid(grid, V::COMPONENTS)?;
        let s = self
            .slabs
            .get(slab)
            .ok_or_else(|| Error::Format(format!("snapshot has no slab {slab}")))?;
        Ok(Field::new(s.data.chunks_exact(V::COMPONENTS).map(V::from_components).collect()))
    }

    /// Director field of slab `slab`; nodes off the sphere by more than
    /// [`NORM_TOL`] are renormalized, the rest are kept bit for bit.
    pub fn director(&self, grid: &Grid, slab: usize) -> Result<DirectorField> {
        let f: Field<Vec3> = self.field(grid, slab)?;
        let mut values = f.into_vec();
        for v in &mut values {
            let n = v.norm();
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::Format("snapshot director has a zero or non-finite node".into()));
            }
            if (v.norm_squared() - 1.0).abs() > NORM_TOL {
                *v /= n;
            }
        }
        Ok(DirectorField::new(values))
    }

    pub fn chart(&self, grid: &Grid, slab: usize) -> Result<Field<Vec2>> {
        self.field(grid, slab)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.axes.len() as u32).to_le_bytes())?;
        w.write_all(&(self.components as u32).to_le_bytes())?;
        for ax in &self.axes {
            w.write_all(&(ax.count as u64).to_le_bytes())?;
            w.write_all(&ax.extent.to_le_bytes())?;
        }
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.meta.len() as u32).to_le_bytes())?;
        w.write_all(self.meta.as_bytes())?;
        w.write_all(&(self.slabs.len() as u64).to_le_bytes())?;
        for s in &self.slabs {
            w.write_all(&s.time.to_le_bytes())?;
            for x in &s.data {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a snapshot file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {version}")));
        }
        let dim = read_u32(&mut r)? as usize;
        let components = read_u32(&mut r)? as usize;
        if !(1..=2).contains(&dim) || !(1..=3).contains(&components) {
            return Err(Error::Format(format!("bad snapshot shape: dim {dim}, {components} components")));
        }
        let mut axes = Vec::with_capacity(dim);
        let mut nodes = 1usize;
        for _ in 0..dim {
            let count = read_u64(&mut r)? as usize;
            let extent = read_f64(&mut r)?;
            nodes = nodes
                .checked_mul(count)
                .ok_or_else(|| Error::Format("snapshot node count overflows".into()))?;
            axes.push(Axis::new(extent, count));
        }
        let seed = read_u64(&mut r)?;
        let meta_len = read_u32(&mut r)? as usize;
        let mut meta = vec![0u8; meta_len];
        r.read_exact(&mut meta)?;
        let meta = String::from_utf8(meta).map_err(|_| Error::Format("snapshot metadata is not UTF-8".into()))?;
        let count = read_u64(&mut r)? as usize;
        let mut slabs = Vec::new();
        for _ in 0..count {
            let time = read_f64(&mut r)?;
            let data = (0..nodes * components)
                .map(|_| read_f64(&mut r))
                .collect::<Result<Vec<f64>>>()?;
            slabs.push(Slab { time, data });
        }
        Ok(Self {
            axes,
            components,
            seed,
            meta,
            slabs,
        })
    }

    pub fn write_binary_file(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_binary(BufWriter::new(File::create(path)?))?;
        Ok(())
    }

    pub fn read_binary_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::read_binary(BufReader::new(f))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let counts: Vec<String> = self.axes.iter().map(|a| a.count.to_string()).collect();
        let extents: Vec<String> = self.axes.iter().map(|a| format!("{:.17e}", a.extent)).collect();
        writeln!(w, "# counts={}", counts.join("x"))?;
        writeln!(w, "# extents={}", extents.join("x"))?;
        writeln!(w, "# seed={}", self.seed)?;
        for line in self.meta.lines() {
            writeln!(w, "# {line}")?;
        }
        let mut cols = vec!["slab".to_string(), "time".to_string(), "x".to_string()];
        if self.axes.len() == 2 {
            cols.push("y".into());
        }
        cols.extend((0..self.components).map(|c| format!("c{c}")));
        writeln!(w, "{}", cols.join(","))?;
        let nodes: usize = self.axes.iter().map(|a| a.count).product();
        for (k, s) in self.slabs.iter().enumerate() {
            for i in 0..nodes {
                write!(w, "{k},{:.17e}", s.time)?;
                let mut rem = i;
                let mut idx = [0usize; 2];
                for (a, ax) in self.axes.iter().enumerate().rev() {
                    idx[a] = rem % ax.count;
                    rem /= ax.count;
                }
                for (a, ax) in self.axes.iter().enumerate() {
                    write!(w, ",{:.17e}", ax.coordinate(idx[a]))?;
                }
                for c in 0..self.components {
                    write!(w, ",{:.17e}", s.data[i * self.components + c])?;
                }
                writeln!(w)?;
            }
        }
        w.flush()
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let g = Grid::square(5, 1.5).unwrap();
        let d = DirectorField::from_fn(&g, |i| {
            let t = 0.1 * i as f64;
            Vec3::new(t.sin(), 0.0, t.cos())
        });
        let snap = Snapshot::of_director(&g, 0.25, &d, 42, "config_hash=abc\nversion=0.1.0");
        let mut buf = Vec::new();
        snap.write_binary(&mut buf).unwrap();
        let back = Snapshot::read_binary(&buf[..]).unwrap();
        assert_eq!(back, snap);
        let d2 = back.director(&g, 0).unwrap();
        for (a, b) in d.iter().zip(d2.iter()) {
            for c in 0..3 {
                assert_eq!(a[c].to_bits(), b[c].to_bits());
            }
        }
    }

    #[test]
    fn rejects_garbage_and_mismatch() {
        assert!(Snapshot::read_binary(&b"NOTASNAPSHOT...."[..]).is_err());
        let g = Grid::line(5, 1.0).unwrap();
        let snap = Snapshot::of_director(&g, 0.0, &DirectorField::constant(&g, Vec3::z()), 0, "");
        let other = Grid::line(7, 1.0).unwrap();
        assert!(snap.director(&other, 0).is_err());
        assert!(snap.chart(&g, 0).is_err());
    }

    #[test]
    fn csv_layout() {
        let g = Grid::line(9, 1.0).unwrap();
        let u = vec![ControlDensity::zeros(&g); 2];
        let snap = Snapshot::of_controls(&g, &[0.0, 0.1], &u, 1, "k=v");
        let mut buf = Vec::new();
        snap.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "slab,time,x,c0,c1");
        assert_eq!(rows.len(), 1 + 2 * 9);
    }
}

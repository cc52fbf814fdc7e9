//! Grid containers (images, label volumes, affinity graphs) and their
//! bit-exact little-endian binary file formats.
//!
//! All grids are row-major with the last dimension varying fastest. Files
//! share one layout: an 8-byte ASCII magic, `u32` ndim, `ndim` `u32` dims,
//! then the payload as fixed-width little-endian words with no padding.
//!
//! | container      | magic        | payload            |
//! |----------------|--------------|--------------------|
//! | [`Image`]        | `TENSRv01`   | `f32` values       |
//! | [`Segmentation`] | `LABLv01\0`  | `u32` labels       |
//! | [`AffinityGraph`]| `AFFNv01\0`  | `ndim` `f32` maps  |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{MalisError, Result};

pub const MAGIC_TENSOR: &[u8; 8] = b"TENSRv01";
pub const MAGIC_LABELS: &[u8; 8] = b"LABLv01\0";
pub const MAGIC_AFFINITY: &[u8; 8] = b"AFFNv01\0";

/// Marker stored in affinity-map slots whose +1 neighbor falls off the grid.
pub const INVALID_AFFINITY: f32 = -1.0;

pub fn volume(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Row-major strides; the last dimension has stride 1.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for d in (0..dims.len().saturating_sub(1)).rev() {
        s[d] = s[d + 1] * dims[d + 1];
    }
    s
}

pub fn ravel(coords: &[usize], dims: &[usize]) -> usize {
    debug_assert_eq!(coords.len(), dims.len());
    let mut idx = 0;
    for (c, d) in coords.iter().zip(dims) {
        debug_assert!(c < d);
        idx = idx * d + c;
    }
    idx
}

pub fn unravel(index: usize, dims: &[usize]) -> Vec<usize> {
    let mut coords = vec![0; dims.len()];
    let mut rest = index;
    for d in (0..dims.len()).rev() {
        coords[d] = rest % dims[d];
        rest /= dims[d];
    }
    coords
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.len() > 3 {
        return Err(MalisError::Header(format!(
            "ndim must be 2 or 3, got {}",
            dims.len()
        )));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(MalisError::Header(format!("zero-sized dimension in {dims:?}")));
    }
    Ok(())
}

/// N-dimensional real-valued intensity grid with values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    dims: Vec<usize>,
    values: Vec<f32>,
}

impl Image {
    pub fn new(dims: Vec<usize>, values: Vec<f32>) -> Result<Self> {
        check_dims(&dims)?;
        if values.len() != volume(&dims) {
            return Err(MalisError::Length {
                declared: volume(&dims),
                found: values.len(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(MalisError::Range {
                    index: i,
                    value: v as f64,
                });
            }
        }
        Ok(Image { dims, values })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let n = volume(&dims);
        Image::new(dims, vec![0.0; n])
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Copy of the axis-aligned sub-grid starting at `origin` with the given size.
    pub fn window(&self, origin: &[usize], size: &[usize]) -> Result<Image> {
        let values = copy_window(&self.values, &self.dims, origin, size)?;
        Ok(Image {
            dims: size.to_vec(),
            values,
        })
    }
}

/// Integer label grid; label 0 is reserved for boundary/unlabeled pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    dims: Vec<usize>,
    labels: Vec<u32>,
}

impl Segmentation {
    pub fn new(dims: Vec<usize>, labels: Vec<u32>) -> Result<Self> {
        check_dims(&dims)?;
        if labels.len() != volume(&dims) {
            return Err(MalisError::Length {
                declared: volume(&dims),
                found: labels.len(),
            });
        }
        Ok(Segmentation { dims, labels })
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn window(&self, origin: &[usize], size: &[usize]) -> Result<Segmentation> {
        let labels = copy_window(&self.labels, &self.dims, origin, size)?;
        Ok(Segmentation {
            dims: size.to_vec(),
            labels,
        })
    }
}

fn copy_window<T: Copy>(
    data: &[T],
    dims: &[usize],
    origin: &[usize],
    size: &[usize],
) -> Result<Vec<T>> {
    if origin.len() != dims.len() || size.len() != dims.len() {
        return Err(MalisError::Argument(format!(
            "window rank mismatch: grid is {}-d, origin {:?}, size {:?}",
            dims.len(),
            origin,
            size
        )));
    }
    for d in 0..dims.len() {
        if size[d] == 0 || origin[d] + size[d] > dims[d] {
            return Err(MalisError::Argument(format!(
                "window origin {origin:?} size {size:?} exceeds dims {dims:?}"
            )));
        }
    }
    let mut out = Vec::with_capacity(volume(size));
    let mut coords = vec![0; size.len()];
    let src_strides = strides(dims);
    loop {
        let mut src = 0;
        for d in 0..size.len() {
            src += (origin[d] + coords[d]) * src_strides[d];
        }
        out.push(data[src]);
        // odometer over the window, last dim fastest
        let mut d = size.len();
        loop {
            if d == 0 {
                return Ok(out);
            }
            d -= 1;
            coords[d] += 1;
            if coords[d] < size[d] {
                break;
            }
            coords[d] = 0;
        }
    }
}

/// Per-dimension edge weight maps over nearest-neighbor pixel pairs.
///
/// `map(d)[i]` is the affinity of the edge between pixel `i` and its +1
/// neighbor along dimension `d`. Slots whose neighbor falls off the grid hold
/// [`INVALID_AFFINITY`] and are never enumerated as edges.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    dims: Vec<usize>,
    maps: Vec<Vec<f32>>,
}

impl AffinityGraph {
    pub fn new(dims: Vec<usize>, maps: Vec<Vec<f32>>) -> Result<Self> {
        check_dims(&dims)?;
        if maps.len() != dims.len() {
            return Err(MalisError::Argument(format!(
                "expected {} affinity maps, got {}",
                dims.len(),
                maps.len()
            )));
        }
        let vol = volume(&dims);
        let strd = strides(&dims);
        for (d, map) in maps.iter().enumerate() {
            if map.len() != vol {
                return Err(MalisError::Length {
                    declared: vol,
                    found: map.len(),
                });
            }
            for (i, &w) in map.iter().enumerate() {
                let valid = (i / strd[d]) % dims[d] + 1 < dims[d];
                if valid {
                    if !(0.0..=1.0).contains(&w) {
                        return Err(MalisError::Range {
                            index: d * vol + i,
                            value: w as f64,
                        });
                    }
                } else if w != INVALID_AFFINITY {
                    return Err(MalisError::Range {
                        index: d * vol + i,
                        value: w as f64,
                    });
                }
            }
        }
        Ok(AffinityGraph { dims, maps })
    }

    /// Graph with every valid edge set to `weight`.
    pub fn uniform(dims: Vec<usize>, weight: f32) -> Result<Self> {
        check_dims(&dims)?;
        if !(0.0..=1.0).contains(&weight) {
            return Err(MalisError::Argument(format!(
                "affinity {weight} outside [0,1]"
            )));
        }
        let vol = volume(&dims);
        let strd = strides(&dims);
        let maps = (0..dims.len())
            .map(|d| {
                (0..vol)
                    .map(|i| {
                        if (i / strd[d]) % dims[d] + 1 < dims[d] {
                            weight
                        } else {
                            INVALID_AFFINITY
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(AffinityGraph { dims, maps })
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn volume(&self) -> usize {
        volume(&self.dims)
    }

    pub fn map(&self, d: usize) -> &[f32] {
        &self.maps[d]
    }

    /// True when pixel `i` has a +1 neighbor along dimension `d`.
    pub fn is_valid(&self, d: usize, pixel: usize) -> bool {
        let stride = strides(&self.dims)[d];
        (pixel / stride) % self.dims[d] + 1 < self.dims[d]
    }

    pub fn weight(&self, d: usize, pixel: usize) -> f32 {
        self.maps[d][pixel]
    }

    pub fn set_weight(&mut self, d: usize, pixel: usize, weight: f32) {
        debug_assert!(self.is_valid(d, pixel));
        self.maps[d][pixel] = weight;
    }

    /// Number of valid edges along one dimension.
    pub fn dim_edge_count(&self, d: usize) -> usize {
        volume(&self.dims) / self.dims[d] * (self.dims[d] - 1)
    }

    /// Total number of valid edges.
    pub fn edge_count(&self) -> usize {
        (0..self.ndim()).map(|d| self.dim_edge_count(d)).sum()
    }

    /// Decode a canonical edge id into (dimension, owner pixel).
    ///
    /// Edges are enumerated dimension-major, then by owner pixel index,
    /// skipping invalid slots. This order matches [`crate::graph::edge_list`].
    pub fn edge_location(&self, edge_id: usize) -> (usize, usize) {
        let mut rest = edge_id;
        for d in 0..self.ndim() {
            let count = self.dim_edge_count(d);
            if rest < count {
                // owner pixels form a sub-grid with dims[d] shortened by one
                let mut sub = self.dims.clone();
                sub[d] -= 1;
                let coords = unravel(rest, &sub);
                return (d, ravel(&coords, &self.dims));
            }
            rest -= count;
        }
        panic!("edge id {edge_id} out of range ({} edges)", self.edge_count());
    }

    /// Both endpoints of a canonical edge id.
    pub fn edge_endpoints(&self, edge_id: usize) -> (usize, usize) {
        let (d, pixel) = self.edge_location(edge_id);
        (pixel, pixel + strides(&self.dims)[d])
    }
}

fn open_reader(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| MalisError::io(path, e))
}

fn create_writer(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| MalisError::io(path, e))
}

fn write_header(w: &mut impl Write, magic: &[u8; 8], dims: &[usize]) -> std::io::Result<()> {
    w.write_all(magic)?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    Ok(())
}

fn read_header(r: &mut impl Read, magic: &[u8; 8], path: &Path) -> Result<Vec<usize>> {
    let mut found = [0u8; 8];
    r.read_exact(&mut found).map_err(|e| MalisError::io(path, e))?;
    if &found != magic {
        return Err(MalisError::Magic {
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: String::from_utf8_lossy(&found).into_owned(),
        });
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(|e| MalisError::io(path, e))?;
    let ndim = u32::from_le_bytes(word) as usize;
    if !(2..=3).contains(&ndim) {
        return Err(MalisError::Header(format!("ndim must be 2 or 3, got {ndim}")));
    }
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        r.read_exact(&mut word).map_err(|e| MalisError::io(path, e))?;
        dims.push(u32::from_le_bytes(word) as usize);
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(MalisError::Header(format!("zero-sized dimension in {dims:?}")));
    }
    Ok(dims)
}

/// Read the rest of the stream as little-endian 4-byte words; the count must
/// match `expected` exactly.
fn read_words(r: &mut impl Read, expected: usize, path: &Path) -> Result<Vec<[u8; 4]>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| MalisError::io(path, e))?;
    if bytes.len() != expected * 4 {
        return Err(MalisError::Length {
            declared: expected,
            found: bytes.len() / 4,
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| [c[0], c[1], c[2], c[3]])
        .collect())
}

pub fn write_tensor(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path)?;
    let io = |e| MalisError::io(path, e);
    write_header(&mut w, MAGIC_TENSOR, &image.dims).map_err(io)?;
    for v in &image.values {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let mut r = open_reader(path)?;
    let dims = read_header(&mut r, MAGIC_TENSOR, path)?;
    let words = read_words(&mut r, volume(&dims), path)?;
    let values = words.into_iter().map(f32::from_le_bytes).collect();
    Image::new(dims, values)
}

pub fn write_labels(path: impl AsRef<Path>, seg: &Segmentation) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path)?;
    let io = |e| MalisError::io(path, e);
    write_header(&mut w, MAGIC_LABELS, &seg.dims).map_err(io)?;
    for l in &seg.labels {
        w.write_all(&l.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Segmentation> {
    let path = path.as_ref();
    let mut r = open_reader(path)?;
    let dims = read_header(&mut r, MAGIC_LABELS, path)?;
    let words = read_words(&mut r, volume(&dims), path)?;
    let labels = words.into_iter().map(u32::from_le_bytes).collect();
    Segmentation::new(dims, labels)
}

pub fn write_affinity(path: impl AsRef<Path>, graph: &AffinityGraph) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_writer(path)?;
    let io = |e| MalisError::io(path, e);
    write_header(&mut w, MAGIC_AFFINITY, &graph.dims).map_err(io)?;
    for map in &graph.maps {
        for v in map {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn read_affinity(path: impl AsRef<Path>) -> Result<AffinityGraph> {
    let path = path.as_ref();
    let mut r = open_reader(path)?;
    let dims = read_header(&mut r, MAGIC_AFFINITY, path)?;
    let vol = volume(&dims);
    let words = read_words(&mut r, vol * dims.len(), path)?;
    let maps = words
        .chunks_exact(vol)
        .map(|chunk| chunk.iter().map(|&w| f32::from_le_bytes(w)).collect())
        .collect();
    AffinityGraph::new(dims, maps)
}

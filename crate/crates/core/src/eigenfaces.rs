//! PCA face templates ("eigenfaces") built with the small-sample Gram trick.
//!
//! Works on tiny training sets, but generalizes poorly across pose and
//! lighting; match thresholds are left to the caller.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::imgcore::GrayImage;

pub const TEMPLATE_SIZE: usize = 64;
pub const MAX_COMPONENTS: usize = 16;
const MAGIC: &[u8; 4] = b"EIGF";

#[derive(Clone, Debug, PartialEq)]
pub struct FaceTemplate {
    pub width: usize,
    pub height: usize,
    pub mean: Vec<f64>,
    /// Orthonormal basis vectors, each `width * height` long.
    pub basis: Vec<Vec<f64>>,
    pub n_train: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub weights: Vec<f64>,
    /// ‖x − mean − basis·weights‖₂
    pub reconstruction_error: f64,
}

/// Resamples to `width × height` and histogram-equalizes.
pub fn preprocess(img: &GrayImage, width: usize, height: usize) -> Result<Vec<f64>> {
    let resized = if img.width() == width && img.height() == height { img.clone() } else { img.resize(width, height)? };
    Ok(resized.equalized().into_vec())
}

pub fn build_template(faces: &[GrayImage]) -> Result<FaceTemplate> {
    let vecs = faces.iter().map(|f| preprocess(f, TEMPLATE_SIZE, TEMPLATE_SIZE)).collect::<Result<Vec<_>>>()?;
    FaceTemplate::from_vectors(&vecs, TEMPLATE_SIZE, TEMPLATE_SIZE)
}

pub fn match_face(t: &FaceTemplate, img: &GrayImage) -> Result<MatchResult> {
    t.project(&preprocess(img, t.width, t.height)?)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl FaceTemplate {
    /// Builds a template from already preprocessed vectors.
    pub fn from_vectors(vectors: &[Vec<f64>], width: usize, height: usize) -> Result<Self> {
        let n = vectors.len();
        let d = width * height;
        if n < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 training faces, got {n}")));
        }
        if d == 0 || vectors.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidParameter(format!("training vectors must all have length {d}")));
        }
        let mut mean = vec![0.0; d];
        for v in vectors {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let centered: Vec<Vec<f64>> =
            vectors.iter().map(|v| v.iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();

        let gram = DMatrix::from_fn(n, n, |i, j| dot(&centered[i], &centered[j]));
        let eig = gram.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let top = eig.eigenvalues[order[0]];
        if !(top > 1e-9) {
            return Err(Error::Degenerate("training faces are identical (zero covariance)".into()));
        }
        let k_max = (n - 1).min(MAX_COMPONENTS);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k_max);
        for &idx in order.iter().take(k_max) {
            if eig.eigenvalues[idx] <= top * 1e-12 {
                break;
            }
            let coeffs = eig.eigenvectors.column(idx);
            let mut u = vec![0.0; d];
            for (c, row) in coeffs.iter().zip(&centered) {
                for (ui, x) in u.iter_mut().zip(row) {
                    *ui += c * x;
                }
            }
            // modified Gram-Schmidt against the vectors kept so far
            for b in &basis {
                let p = dot(&u, b);
                u.iter_mut().zip(b).for_each(|(ui, bi)| *ui -= p * bi);
            }
            let norm = dot(&u, &u).sqrt();
            if norm <= 1e-12 {
                continue;
            }
            u.iter_mut().for_each(|ui| *ui /= norm);
            basis.push(u);
        }
        Ok(Self { width, height, mean, basis, n_train: n })
    }

    pub fn k(&self) -> usize {
        self.basis.len()
    }

    /// Projects a preprocessed vector onto the basis.
    pub fn project(&self, x: &[f64]) -> Result<MatchResult> {
        if x.len() != self.mean.len() {
            return Err(Error::InvalidParameter(format!(
                "vector length {} does not match template {}x{}",
                x.len(),
                self.width,
                self.height
            )));
        }
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        let weights: Vec<f64> = self.basis.iter().map(|b| dot(b, &centered)).collect();
        let reconstruction_error = self.residual(&centered, &weights);
        Ok(MatchResult { weights, reconstruction_error })
    }

    /// ‖centered − basis·weights‖₂ for arbitrary weights.
    pub fn residual(&self, centered: &[f64], weights: &[f64]) -> f64 {
        let mut r = centered.to_vec();
        for (b, w) in self.basis.iter().zip(weights) {
            r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= w * bi);
        }
        dot(&r, &r).sqrt()
    }

    /// Little-endian: "EIGF", u32 width, height, k, n, then the mean and the
    /// k basis vectors as f64.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        for v in [self.width, self.height, self.k(), self.n_train] {
            out.write_all(&(v as u32).to_le_bytes())?;
        }
        for v in self.mean.iter().chain(self.basis.iter().flatten()) {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not an eigenface template (bad magic)".into()));
        }
        let mut header = [0usize; 4];
        for h in header.iter_mut() {
            let mut b = [0u8; 4];
            input.read_exact(&mut b)?;
            *h = u32::from_le_bytes(b) as usize;
        }
        let [width, height, k, n_train] = header;
        let d = width * height;
        if d == 0 || k > d {
            return Err(Error::Format(format!("implausible template header {header:?}")));
        }
        let mut read_vec = |len: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; len * 8];
            input.read_exact(&mut buf)?;
            Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
        };
        let mean = read_vec(d)?;
        let basis = (0..k).map(|_| read_vec(d)).collect::<Result<Vec<_>>>()?;
        Ok(Self { width, height, mean, basis, n_train })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

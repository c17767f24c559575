//! Trained-library container: magic "CWLB", a 32-bit little-endian format
//! version, a table of named sections, and a trailing SHA-256 checksum.
//! Floating-point payloads are little-endian f64; matrices are
//! column-major behind explicit (rows, cols) headers.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::error::{CwError, Result};
use crate::train::{
    ComponentLibrary, PairKind, TrainedLibrary, TrainedPortSpace, TrainingMeta,
};

const MAGIC: &[u8; 4] = b"CWLB";
const VERSION: u32 = 1;

fn kind_name(kind: PairKind) -> &'static str {
    match kind {
        PairKind::HStrutJoint => "hstrut_joint",
        PairKind::JointHStrut => "joint_hstrut",
        PairKind::VStrutJoint => "vstrut_joint",
        PairKind::JointVStrut => "joint_vstrut",
    }
}

fn kind_from_name(name: &str) -> Option<PairKind> {
    match name {
        "hstrut_joint" => Some(PairKind::HStrutJoint),
        "joint_hstrut" => Some(PairKind::JointHStrut),
        "vstrut_joint" => Some(PairKind::VStrutJoint),
        "joint_vstrut" => Some(PairKind::JointVStrut),
        _ => None,
    }
}

fn encode_matrix(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * m.len());
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            out.extend_from_slice(&m[(r, c)].to_le_bytes());
        }
    }
    out
}

fn decode_matrix(bytes: &[u8]) -> Result<DMatrix<f64>> {
    if bytes.len() < 16 {
        return Err(CwError::Format("matrix section too short".into()));
    }
    let rows = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let need = 16 + 8 * rows * cols;
    if bytes.len() != need {
        return Err(CwError::Format(format!(
            "matrix section has {} bytes, expected {need}",
            bytes.len()
        )));
    }
    let mut m = DMatrix::<f64>::zeros(rows, cols);
    let mut off = 16;
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            off += 8;
        }
    }
    Ok(m)
}

fn vec_as_matrix(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v)
}

/// Serialize the trained library to its binary container.
pub fn save_library(path: &Path, lib: &TrainedLibrary) -> Result<()> {
    let mut sections: Vec<(String, Vec<u8>)> = Vec::new();
    let meta_text = toml::to_string(&lib.meta)
        .map_err(|e| CwError::Format(format!("cannot serialize metadata: {e}")))?;
    sections.push(("meta".into(), meta_text.into_bytes()));
    for (kind, space) in &lib.spaces {
        let base = format!("space/{}", kind_name(*kind));
        sections.push((format!("{base}/chi"), encode_matrix(space.raw())));
        sections.push((
            format!("{base}/sv"),
            encode_matrix(&vec_as_matrix(space.singular_values())),
        ));
        sections.push((
            format!("{base}/size"),
            (space.default_size as u64).to_le_bytes().to_vec(),
        ));
    }
    for (r, op) in lib.components.ops.iter().enumerate() {
        sections.push((format!("comp/{r}/lift"), encode_matrix(op.lift_matrix())));
        sections.push((format!("comp/{r}/schur"), encode_matrix(op.nodal_schur())));
    }

    let mut payload = Vec::new();
    payload.extend_from_slice(MAGIC);
    payload.extend_from_slice(&VERSION.to_le_bytes());
    payload.extend_from_slice(&(sections.len() as u64).to_le_bytes());
    for (name, body) in &sections {
        let nb = name.as_bytes();
        payload.extend_from_slice(&(nb.len() as u16).to_le_bytes());
        payload.extend_from_slice(nb);
        payload.extend_from_slice(&(body.len() as u64).to_le_bytes());
        payload.extend_from_slice(body);
    }
    let digest = Sha256::digest(&payload);
    let mut file = std::fs::File::create(path)?;
    file.write_all(&payload)?;
    file.write_all(&digest)?;
    Ok(())
}

/// Load and verify a trained library; component meshes are rebuilt from
/// the stored geometry, lifting data is reused as persisted.
pub fn load_library(path: &Path) -> Result<TrainedLibrary> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 4 + 4 + 8 + 32 {
        return Err(CwError::Format("library file too short".into()));
    }
    let (payload, digest) = bytes.split_at(bytes.len() - 32);
    let computed = Sha256::digest(payload);
    if digest != computed.as_slice() {
        return Err(CwError::Format("library checksum mismatch".into()));
    }
    if &payload[0..4] != MAGIC {
        return Err(CwError::Format("bad magic bytes".into()));
    }
    let version = u32::from_le_bytes(payload[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(CwError::Format(format!(
            "library format version {version}, expected {VERSION}"
        )));
    }
    let count = u64::from_le_bytes(payload[8..16].try_into().unwrap()) as usize;
    let mut off = 16usize;
    let mut sections: BTreeMap<String, &[u8]> = BTreeMap::new();
    for _ in 0..count {
        if off + 2 > payload.len() {
            return Err(CwError::Format("truncated section header".into()));
        }
        let nlen = u16::from_le_bytes(payload[off..off + 2].try_into().unwrap()) as usize;
        off += 2;
        let name = std::str::from_utf8(&payload[off..off + nlen])
            .map_err(|_| CwError::Format("section name is not UTF-8".into()))?
            .to_string();
        off += nlen;
        let blen = u64::from_le_bytes(payload[off..off + 8].try_into().unwrap()) as usize;
        off += 8;
        if off + blen > payload.len() {
            return Err(CwError::Format(format!("section {name} overruns file")));
        }
        sections.insert(name, &payload[off..off + blen]);
        off += blen;
    }

    let meta_bytes = sections
        .get("meta")
        .ok_or_else(|| CwError::Format("missing meta section".into()))?;
    let meta: TrainingMeta = toml::from_str(
        std::str::from_utf8(meta_bytes)
            .map_err(|_| CwError::Format("meta section is not UTF-8".into()))?,
    )
    .map_err(|e| CwError::Format(format!("invalid metadata: {e}")))?;

    // rebuild reference components deterministically from the metadata
    let components = rebuild_components(&meta, &sections)?;

    let mut spaces = BTreeMap::new();
    for kind in PairKind::ALL {
        let base = format!("space/{}", kind_name(kind));
        let chi = decode_matrix(
            sections
                .get(&format!("{base}/chi"))
                .ok_or_else(|| CwError::Format(format!("missing section {base}/chi")))?,
        )?;
        let sv_mat = decode_matrix(
            sections
                .get(&format!("{base}/sv"))
                .ok_or_else(|| CwError::Format(format!("missing section {base}/sv")))?,
        )?;
        let size_bytes = sections
            .get(&format!("{base}/size"))
            .ok_or_else(|| CwError::Format(format!("missing section {base}/size")))?;
        if size_bytes.len() != 8 {
            return Err(CwError::Format("bad size section".into()));
        }
        let size = u64::from_le_bytes(size_bytes[..8].try_into().unwrap()) as usize;
        if chi.nrows() != 2 * meta.resolution {
            return Err(CwError::Format(format!(
                "basis dimension {} does not match resolution {}",
                chi.nrows(),
                meta.resolution
            )));
        }
        let sv: Vec<f64> = sv_mat.iter().copied().collect();
        spaces.insert(kind, TrainedPortSpace::from_parts(chi, sv, size));
    }
    let _ = kind_from_name; // referenced for completeness of the name map
    Ok(TrainedLibrary::from_parts(components, spaces, meta))
}

fn rebuild_components(
    meta: &TrainingMeta,
    sections: &BTreeMap<String, &[u8]>,
) -> Result<ComponentLibrary> {
    use crate::condense::ComponentOperator;
    use crate::model::{make_joint, make_strut, make_vertical_strut};
    let geo = meta.geometry;
    let mat = meta.material;
    let references = vec![
        make_joint(meta.resolution, &geo, mat)?,
        make_strut(meta.resolution, &geo, mat)?,
        make_vertical_strut(meta.resolution, &geo, mat)?,
    ];
    let mut ops = Vec::with_capacity(references.len());
    for (r, rc) in references.into_iter().enumerate() {
        let lift = decode_matrix(
            sections
                .get(&format!("comp/{r}/lift"))
                .ok_or_else(|| CwError::Format(format!("missing section comp/{r}/lift")))?,
        )?;
        let schur = decode_matrix(
            sections
                .get(&format!("comp/{r}/schur"))
                .ok_or_else(|| CwError::Format(format!("missing section comp/{r}/schur")))?,
        )?;
        ops.push(ComponentOperator::from_parts(rc, lift, schur)?);
    }
    Ok(ComponentLibrary {
        ops,
        refs: crate::model::LatticeRefs {
            joint: 0,
            hstrut: 1,
            vstrut: 2,
        },
        geo,
        material: mat,
        resolution: meta.resolution,
    })
}

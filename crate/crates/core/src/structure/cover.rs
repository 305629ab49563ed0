use serde::{Deserialize, Serialize};

use crate::rational::Rational;
use crate::search::Coloring;

use super::ambient::{Ambient, ElementSet};
use super::shifts::{syndetic_indices, thick_shift_indices, ThickTestFamily};
use super::StructureError;

/// Which colors an element is shifted into, and by what.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverCertificate {
    pub x: Rational,
    /// Index into [`CoverDecomposition::ys`].
    pub l: usize,
    /// `(m, f)` for each `m` in `Y_l`: `x` lies in `f * C_m`.
    pub shifts: Vec<(usize, Rational)>,
}

/// Colors are numbered `0..n` as in the coloring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverDecomposition {
    pub k: usize,
    pub ys: Vec<Vec<usize>>,
    /// Shift set, in enumeration order.
    pub f: Vec<Rational>,
    pub width: usize,
    /// Every color set whose union is syndetic, with its minimal witness.
    pub syndetic: Vec<(Vec<usize>, Vec<Rational>)>,
    /// Per `Y_l`, one shift per family set (family order): `a * F` lies in
    /// the union of the classes in `Y_l`.
    pub thickness_certificates: Vec<Vec<Rational>>,
    /// One per ambient element, in enumeration order.
    pub cover_certificates: Vec<CoverCertificate>,
}

fn members(mask: u32, n: usize) -> Vec<usize> {
    (0..n).filter(|m| mask >> m & 1 == 1).collect()
}

/// Color classes restricted to the ambient.
pub(crate) fn classes(
    coloring: &Coloring,
    amb: &Ambient,
) -> Result<Vec<ElementSet>, StructureError> {
    let mut out = vec![amb.empty_set(); coloring.num_colors()];
    for i in 0..amb.len() {
        let c = coloring
            .color_of(amb.value(i))
            .ok_or_else(|| StructureError::NotCovered(amb.value(i).clone()))?;
        out[c].insert(i);
    }
    Ok(out)
}

fn union_of(classes: &[ElementSet], ys: &[usize], amb: &Ambient) -> ElementSet {
    let mut u = amb.empty_set();
    for &m in ys {
        u.union_with(&classes[m]);
    }
    u
}

pub const MAX_COVER_COLORS: usize = 16;

/// Splits the colors into groups `Y_1..Y_k` whose unions are thick, with a
/// shift set `F` such that every `x` lies in `F * C_m` for all `m` of some
/// `Y_l`. Both properties are re-verified before returning.
pub fn cover_decomposition(
    coloring: &Coloring,
    width: usize,
    amb: &Ambient,
    family: &ThickTestFamily,
) -> Result<CoverDecomposition, StructureError> {
    let n = coloring.num_colors();
    if n > MAX_COVER_COLORS {
        return Err(StructureError::TooManyColors(n));
    }
    let classes = classes(coloring, amb)?;
    let full = (1u32 << n) - 1;

    let mut syndetic = Vec::new();
    let mut in_s = vec![false; 1 << n];
    let mut f_idx: Vec<usize> = Vec::new();
    for mask in 1..=full {
        let ys = members(mask, n);
        if let Some(w) = syndetic_indices(&union_of(&classes, &ys, amb), width, amb) {
            in_s[mask as usize] = true;
            f_idx.extend(&w);
            syndetic.push((ys, w));
        }
    }
    f_idx.sort_unstable();
    f_idx.dedup();

    // image[fi][m] = f * C_m
    let images: Vec<Vec<ElementSet>> = f_idx
        .iter()
        .map(|&f| classes.iter().map(|c| amb.scale(f, c)).collect())
        .collect();

    // Members of the dual family, in lexicographic order of their color lists.
    let mut t_family: Vec<Vec<usize>> = (1..=full)
        .filter(|&mask| !in_s[(full ^ mask) as usize])
        .map(|mask| members(mask, n))
        .collect();
    t_family.sort();

    let mut ys: Vec<Vec<usize>> = Vec::new();
    let mut chosen = Vec::with_capacity(amb.len());
    for x in 0..amb.len() {
        let a_x: Vec<bool> = (0..n)
            .map(|m| images.iter().any(|im| im[m].contains(x)))
            .collect();
        let y = t_family
            .iter()
            .find(|y| y.iter().all(|&m| a_x[m]))
            .ok_or_else(|| StructureError::CoverFailure(amb.value(x).clone()))?;
        chosen.push(y.clone());
        if !ys.contains(y) {
            ys.push(y.clone());
        }
    }
    ys.sort();

    let mut cover_certificates = Vec::with_capacity(amb.len());
    for (x, y) in chosen.iter().enumerate() {
        let l = ys.iter().position(|c| c == y).expect("recorded group");
        let shifts = y
            .iter()
            .map(|&m| {
                let fi = (0..f_idx.len())
                    .find(|&fi| images[fi][m].contains(x))
                    .expect("m in A_x");
                (m, amb.value(f_idx[fi]).clone())
            })
            .collect();
        cover_certificates.push(CoverCertificate {
            x: amb.value(x).clone(),
            l,
            shifts,
        });
    }

    let mut thickness_certificates = Vec::with_capacity(ys.len());
    for (l, y) in ys.iter().enumerate() {
        let shifts = thick_shift_indices(&union_of(&classes, y, amb), family, amb)
            .ok_or(StructureError::ThicknessUncertified { l, ys: y.clone() })?;
        thickness_certificates.push(
            shifts
                .iter()
                .map(|&a| amb.value(a as usize).clone())
                .collect(),
        );
    }

    let cover = CoverDecomposition {
        k: ys.len(),
        ys,
        f: f_idx.iter().map(|&i| amb.value(i).clone()).collect(),
        width,
        syndetic: syndetic
            .into_iter()
            .map(|(y, w)| (y, w.iter().map(|&i| amb.value(i).clone()).collect()))
            .collect(),
        thickness_certificates,
        cover_certificates,
    };
    verify_cover(coloring, amb, family, &cover).map_err(StructureError::VerificationFailed)?;
    Ok(cover)
}

/// Independent check of both cover properties using the ground's own
/// arithmetic rather than the ambient tables.
pub fn verify_cover(
    coloring: &Coloring,
    amb: &Ambient,
    family: &ThickTestFamily,
    cover: &CoverDecomposition,
) -> Result<(), String> {
    let ground = amb.ground();
    let in_ambient_color = |v: &Rational| -> Option<usize> {
        if amb.index_of(v).is_some() {
            coloring.color_of(v)
        } else {
            None
        }
    };
    if cover.k != cover.ys.len() || cover.k == 0 {
        return Err(format!("k = {} but {} groups", cover.k, cover.ys.len()));
    }
    if cover.thickness_certificates.len() != cover.k {
        return Err("one thickness certificate per group expected".into());
    }
    // (i)
    let sets = family.sets_as_values(amb);
    for (l, (y, shifts)) in cover
        .ys
        .iter()
        .zip(&cover.thickness_certificates)
        .enumerate()
    {
        if shifts.len() != sets.len() {
            return Err(format!(
                "group {l}: {} shifts for {} family sets",
                shifts.len(),
                sets.len()
            ));
        }
        for (fset, a) in sets.iter().zip(shifts) {
            for f in fset {
                let prod = ground.mul(a, f);
                match in_ambient_color(&prod) {
                    Some(c) if y.contains(&c) => {}
                    _ => {
                        return Err(format!(
                            "group {l}: {a} * {f} = {prod} is outside the union"
                        ))
                    }
                }
            }
        }
    }
    // (ii)
    if cover.cover_certificates.len() != amb.len() {
        return Err("one cover certificate per element expected".into());
    }
    for (i, cert) in cover.cover_certificates.iter().enumerate() {
        if &cert.x != amb.value(i) {
            return Err(format!(
                "certificate {i} is for {}, expected {}",
                cert.x,
                amb.value(i)
            ));
        }
        let y = cover
            .ys
            .get(cert.l)
            .ok_or_else(|| format!("{}: group {} out of range", cert.x, cert.l))?;
        let ms: Vec<usize> = cert.shifts.iter().map(|(m, _)| *m).collect();
        if &ms != y {
            return Err(format!(
                "{}: shifts for colors {ms:?}, group is {y:?}",
                cert.x
            ));
        }
        for (m, f) in &cert.shifts {
            if !cover.f.contains(f) {
                return Err(format!("{}: shift {f} is not in F", cert.x));
            }
            // x = f * c with c of color m
            let ok = match ground.inverse(f) {
                Some(inv) if ground.is_prime_field() => {
                    in_ambient_color(&ground.mul(&cert.x, &inv)) == Some(*m)
                }
                _ => amb
                    .values()
                    .iter()
                    .any(|c| coloring.color_of(c) == Some(*m) && ground.mul(f, c) == cert.x),
            };
            if !ok {
                return Err(format!("{} is not in {f} * C_{m}", cert.x));
            }
        }
    }
    Ok(())
}

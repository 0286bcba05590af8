//! Chain description files (TOML, `schema = 1`).
//!
//! ```toml
//! schema = 1
//!
//! [arm_base_to_table_base]
//! translation = [1500.0, 0.0, 0.0]
//!
//! [[table_joints]]
//! kind = "revolute"
//! axis = [0.0, 1.0, 0.0]
//! translation = [0.0, 0.0, 700.0]
//!
//! [[arm_joints]]
//! kind = "revolute"
//! axis = [0.0, 0.0, 1.0]
//! ```
//!
//! Rotations are scalar-first quaternions `[eta, ex, ey, ez]`. Lengths in mm.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::Deserialize;
use toml::Spanned;

use crate::chain::{ChainDescription, JointConfig, JointEntry, JointKind, Pose};
use crate::quat::UnitQuat;

pub const SCHEMA_VERSION: i64 = 1;

/// Quaternions within this distance of unit norm are renormalized silently.
const UNIT_TOLERANCE: f64 = 1e-6;

/// A chain file problem, anchored to a line where possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainFileError {
    pub path: Option<PathBuf>,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ChainFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = self
            .path
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "<chain>".to_string());
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{path}:{l}:{c}: {}", self.message),
            (Some(l), None) => write!(f, "{path}:{l}: {}", self.message),
            _ => write!(f, "{path}: {}", self.message),
        }
    }
}

impl std::error::Error for ChainFileError {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChain {
    schema: Spanned<i64>,
    #[serde(default)]
    table_joints: Vec<Spanned<RawJoint>>,
    arm_joints: Spanned<Vec<Spanned<RawJoint>>>,
    arm_base_to_table_base: Option<Spanned<RawTransform>>,
    table_to_deposition: Option<Spanned<RawTransform>>,
    tool_offset: Option<Spanned<RawTransform>>,
    home: Option<Spanned<RawHome>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJoint {
    kind: JointKind,
    axis: Spanned<Vec<f64>>,
    translation: Option<Spanned<Vec<f64>>>,
    rotation: Option<Spanned<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransform {
    translation: Option<Spanned<Vec<f64>>>,
    rotation: Option<Spanned<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHome {
    #[serde(default)]
    table: Vec<f64>,
    arm: Vec<f64>,
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn error_at(&self, span: Option<Range<usize>>, message: impl Into<String>) -> ChainFileError {
        let (line, column) = match span {
            Some(s) => {
                let (l, c) = line_col(self.text, s.start);
                (Some(l), Some(c))
            }
            None => (None, None),
        };
        ChainFileError { path: None, line, column, message: message.into() }
    }

    fn array<const N: usize>(&self, v: &Spanned<Vec<f64>>, name: &str) -> Result<[f64; N], ChainFileError> {
        let values: [f64; N] = v
            .get_ref()
            .as_slice()
            .try_into()
            .map_err(|_| self.error_at(Some(v.span()), format!("{name} needs {N} values, got {}", v.get_ref().len())))?;
        if !values.iter().all(|x| x.is_finite()) {
            return Err(self.error_at(Some(v.span()), format!("{name} is not finite")));
        }
        Ok(values)
    }

    fn translation(&self, t: &Option<Spanned<Vec<f64>>>) -> Result<Vector3<f64>, ChainFileError> {
        match t {
            None => Ok(Vector3::zeros()),
            Some(t) => Ok(Vector3::from(self.array::<3>(t, "translation")?)),
        }
    }

    fn rotation(&self, r: &Option<Spanned<Vec<f64>>>) -> Result<UnitQuat, ChainFileError> {
        let Some(r) = r else { return Ok(UnitQuat::IDENTITY) };
        let [w, x, y, z] = self.array::<4>(r, "rotation")?;
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(self.error_at(
                Some(r.span()),
                format!("rotation quaternion has norm {n:.9}, expected 1 (tolerance {UNIT_TOLERANCE:e})"),
            ));
        }
        Ok(UnitQuat::new_normalize(w, Vector3::new(x, y, z)))
    }

    fn transform(&self, t: &Option<Spanned<RawTransform>>) -> Result<Pose, ChainFileError> {
        match t {
            None => Ok(Pose::IDENTITY),
            Some(t) => {
                let raw = t.get_ref();
                Ok(Pose::new(self.translation(&raw.translation)?, self.rotation(&raw.rotation)?))
            }
        }
    }

    fn joint(&self, j: &Spanned<RawJoint>) -> Result<JointEntry, ChainFileError> {
        let raw = j.get_ref();
        let axis = Vector3::from(self.array::<3>(&raw.axis, "axis")?);
        let n = axis.norm();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(self.error_at(Some(raw.axis.span()), format!("joint axis has norm {n:.9}, expected a unit vector")));
        }
        let origin = Pose::new(self.translation(&raw.translation)?, self.rotation(&raw.rotation)?);
        Ok(JointEntry { kind: raw.kind, axis: axis / n, origin })
    }
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(offset, |i| offset - i - 1) + 1;
    (line, col)
}

/// Parses a chain description from TOML text.
pub fn parse_chain(text: &str) -> Result<ChainDescription, ChainFileError> {
    let ctx = Ctx { text };
    let raw: RawChain = toml::from_str(text).map_err(|e| ctx.error_at(e.span(), e.message().trim().to_string()))?;

    if *raw.schema.get_ref() != SCHEMA_VERSION {
        return Err(ctx.error_at(
            Some(raw.schema.span()),
            format!("unsupported schema {} (this build reads schema {SCHEMA_VERSION})", raw.schema.get_ref()),
        ));
    }
    if raw.arm_joints.get_ref().is_empty() {
        return Err(ctx.error_at(Some(raw.arm_joints.span()), "at least one arm joint is required"));
    }

    let table_joints = raw.table_joints.iter().map(|j| ctx.joint(j)).collect::<Result<Vec<_>, _>>()?;
    let arm_joints = raw.arm_joints.get_ref().iter().map(|j| ctx.joint(j)).collect::<Result<Vec<_>, _>>()?;

    let home = match &raw.home {
        None => None,
        Some(h) => {
            let raw_home = h.get_ref();
            if raw_home.table.len() != table_joints.len() || raw_home.arm.len() != arm_joints.len() {
                return Err(ctx.error_at(
                    Some(h.span()),
                    format!(
                        "home has {}+{} joint values, chain has {}+{} joints",
                        raw_home.table.len(),
                        raw_home.arm.len(),
                        table_joints.len(),
                        arm_joints.len()
                    ),
                ));
            }
            Some(JointConfig::new(raw_home.table.clone(), raw_home.arm.clone()))
        }
    };

    let chain = ChainDescription {
        table_joints,
        arm_joints,
        arm_base_to_table_base: ctx.transform(&raw.arm_base_to_table_base)?,
        table_to_deposition: ctx.transform(&raw.table_to_deposition)?,
        tool_offset: ctx.transform(&raw.tool_offset)?,
        home,
    };
    chain.validate().map_err(|e| ctx.error_at(None, e.to_string()))?;
    Ok(chain)
}

/// Reads and parses a chain description file.
pub fn load_chain(path: impl AsRef<Path>) -> Result<ChainDescription, ChainFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ChainFileError {
        path: Some(path.to_path_buf()),
        line: None,
        column: None,
        message: format!("cannot read chain file: {e}"),
    })?;
    parse_chain(&text).map_err(|mut e| {
        e.path = Some(path.to_path_buf());
        e
    })
}

/// Renders a chain description in the file format read by [`parse_chain`].
pub fn to_toml(chain: &ChainDescription) -> String {
    use std::fmt::Write;

    fn vec3(v: &Vector3<f64>) -> String {
        format!("[{:?}, {:?}, {:?}]", v.x, v.y, v.z)
    }
    fn quat(q: &UnitQuat) -> String {
        let a = q.to_array();
        format!("[{:?}, {:?}, {:?}, {:?}]", a[0], a[1], a[2], a[3])
    }
    fn list(v: &[f64]) -> String {
        let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
        format!("[{}]", items.join(", "))
    }
    fn pose(out: &mut String, name: &str, p: &Pose) {
        let _ = writeln!(out, "\n[{name}]\ntranslation = {}\nrotation = {}", vec3(&p.p), quat(&p.q));
    }
    fn joint(out: &mut String, table: &str, j: &JointEntry) {
        let kind = match j.kind {
            JointKind::Revolute => "revolute",
            JointKind::Prismatic => "prismatic",
        };
        let _ = writeln!(
            out,
            "\n[[{table}]]\nkind = \"{kind}\"\naxis = {}\ntranslation = {}\nrotation = {}",
            vec3(&j.axis),
            vec3(&j.origin.p),
            quat(&j.origin.q)
        );
    }

    let mut out = format!("schema = {SCHEMA_VERSION}\n");
    pose(&mut out, "arm_base_to_table_base", &chain.arm_base_to_table_base);
    pose(&mut out, "table_to_deposition", &chain.table_to_deposition);
    pose(&mut out, "tool_offset", &chain.tool_offset);
    for j in &chain.table_joints {
        joint(&mut out, "table_joints", j);
    }
    for j in &chain.arm_joints {
        joint(&mut out, "arm_joints", j);
    }
    if let Some(h) = &chain.home {
        let _ = writeln!(out, "\n[home]\ntable = {}\narm = {}", list(&h.table), list(&h.arm));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema = 1

[[arm_joints]]
kind = "revolute"
axis = [0.0, 0.0, 1.0]

[tool_offset]
translation = [1.0, 0.0, 0.0]
"#;

    #[test]
    fn minimal_chain_parses() {
        let chain = parse_chain(MINIMAL).unwrap();
        assert_eq!(chain.arm_dof(), 1);
        assert_eq!(chain.table_dof(), 0);
        assert_eq!(chain.tool_offset.p, Vector3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = "schema = 1\n\n[[arm_joints]]\nkind = \"revolute\"\naxis = [0.0, 0.0,\n";
        let err = parse_chain(text).unwrap_err();
        assert!(err.line.is_some(), "{err}");
    }

    #[test]
    fn wrong_length_arrays_are_rejected() {
        let text = MINIMAL.replace("axis = [0.0, 0.0, 1.0]", "axis = [0.0, 0.0, 0.0, 1.0]");
        let err = parse_chain(&text).unwrap_err();
        assert!(err.message.contains("axis needs 3 values, got 4"), "{err}");
        assert!(err.line.is_some());
    }

    #[test]
    fn bad_axis_reports_its_line() {
        let text = MINIMAL.replace("axis = [0.0, 0.0, 1.0]", "axis = [0.0, 0.0, 2.0]");
        let err = parse_chain(&text).unwrap_err();
        assert_eq!(err.line, Some(6), "{err}");
        assert!(err.message.contains("axis"));
    }

    #[test]
    fn quaternion_tolerance() {
        let near = MINIMAL.to_string() + "rotation = [1.0000001, 0.0, 0.0, 0.0]\n";
        let chain = parse_chain(&near).unwrap();
        assert!((chain.tool_offset.q.norm() - 1.0).abs() < 1e-15);
        let far = MINIMAL.to_string() + "rotation = [1.1, 0.0, 0.0, 0.0]\n";
        let err = parse_chain(&far).unwrap_err();
        assert_eq!(err.line, Some(10), "{err}");
    }

    #[test]
    fn wrong_schema_and_unknown_keys() {
        let err = parse_chain(&MINIMAL.replace("schema = 1", "schema = 2")).unwrap_err();
        assert_eq!(err.line, Some(2));
        let err = parse_chain(&(MINIMAL.to_string() + "colour = \"red\"\n")).unwrap_err();
        assert!(err.message.contains("colour"), "{err}");
    }

    #[test]
    fn home_dimension_checked() {
        let text = MINIMAL.to_string() + "\n[home]\narm = [0.0, 1.0]\n";
        let err = parse_chain(&text).unwrap_err();
        assert_eq!(err.line, Some(11), "{err}");
    }

    #[test]
    fn line_col_is_one_based() {
        assert_eq!(line_col("ab\ncd", 0), (1, 1));
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
    }
}

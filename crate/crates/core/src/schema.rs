//! Versioned CSV tables and a strict checker for them.
//!
//! Every table starts with a `# scarloc:<kind> v<version>` line, followed by a
//! header row and data rows. Absent values are empty cells.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Int,
    Float,
    /// Float or empty.
    OptFloat,
    Text,
    /// Text or empty.
    OptText,
}

#[derive(Debug, Clone, Copy)]
pub struct Column {
    pub name: &'static str,
    pub ty: ColumnType,
}

const fn col(name: &'static str, ty: ColumnType) -> Column {
    Column { name, ty }
}

#[derive(Debug)]
pub struct TableSchema {
    pub kind: &'static str,
    pub version: u32,
    pub columns: &'static [Column],
    /// Extra trailing columns whose names start with this prefix are `OptFloat`.
    pub variadic_prefix: Option<&'static str>,
}

use ColumnType::*;

pub const ENERGIES: TableSchema = TableSchema {
    kind: "energies",
    version: 1,
    columns: &[col("index", Int), col("energy", Float), col("residual", Float)],
    variadic_prefix: None,
};

pub const DIAGNOSTICS: TableSchema = TableSchema {
    kind: "diagnostics",
    version: 1,
    columns: &[
        col("model", Text),
        col("index", Int),
        col("energy", Float),
        col("e_norm", Float),
        col("residual", OptFloat),
        col("ipr2", Float),
        col("t_exp", OptFloat),
        col("v_exp", OptFloat),
        col("tv_ratio", OptFloat),
        col("lambda_db", OptFloat),
        col("xi_tail", OptFloat),
        col("tail_r2", OptFloat),
        col("tail_note", OptText),
        col("consistency", OptFloat),
        col("centroid_x", OptFloat),
        col("centroid_y", OptFloat),
        col("anisotropy", OptFloat),
        col("tv_excess", OptFloat),
        col("scar_score", OptFloat),
        col("label", OptText),
    ],
    variadic_prefix: Some("ipr_q"),
};

pub const HISTOGRAM: TableSchema = TableSchema {
    kind: "histogram",
    version: 1,
    columns: &[col("bin_center", Float), col("density", Float)],
    variadic_prefix: None,
};

pub const STATS_SUMMARY: TableSchema = TableSchema {
    kind: "stats_summary",
    version: 1,
    columns: &[
        col("mean_sym", Float),
        col("n_levels", Int),
        col("n_ratios", Int),
        col("window_lo", Int),
        col("window_hi", Int),
        col("n_dropped", Int),
        col("tv_poisson", Float),
        col("tv_goe", Float),
        col("overflow", Float),
    ],
    variadic_prefix: None,
};

pub const FIG1_MAP: TableSchema = TableSchema {
    kind: "fig1_map",
    version: 1,
    columns: &[
        col("size", Int),
        col("strength", Float),
        col("e_bin", Int),
        col("e_lo", Float),
        col("e_hi", Float),
        col("n_states", Int),
        col("median_log10_ipr2", OptFloat),
    ],
    variadic_prefix: None,
};

pub const FIG2_SCALING: TableSchema = TableSchema {
    kind: "fig2_scaling",
    version: 1,
    columns: &[
        col("class", Text),
        col("strength", Float),
        col("size", Int),
        col("n_states", Int),
        col("mean_ipr2", OptFloat),
        col("slope", OptFloat),
        col("d2", OptFloat),
        col("stderr", OptFloat),
    ],
    variadic_prefix: None,
};

pub const FIG3_STATS: TableSchema = TableSchema {
    kind: "fig3_stats",
    version: 1,
    columns: &[
        col("size", Int),
        col("strength", Float),
        col("window", Text),
        col("n_seeds", Int),
        col("n_ratios", Int),
        col("mean_sym", OptFloat),
        col("tv_poisson", OptFloat),
        col("tv_goe", OptFloat),
    ],
    variadic_prefix: None,
};

pub const FIG4_TV: TableSchema = TableSchema {
    kind: "fig4_tv",
    version: 1,
    columns: &[
        col("size", Int),
        col("strength", Float),
        col("seed", Int),
        col("index", Int),
        col("energy", Float),
        col("e_norm", Float),
        col("tv_ratio", Float),
        col("baseline_p90", OptFloat),
        col("wavelength_ok", Int),
        col("label", Text),
    ],
    variadic_prefix: None,
};

pub const TB_ONSITE: TableSchema = TableSchema {
    kind: "tb_onsite",
    version: 1,
    columns: &[col("i", Int), col("j", Int), col("onsite", Float), col("n_bumps", Int)],
    variadic_prefix: None,
};

pub const TB_COMPARE: TableSchema = TableSchema {
    kind: "tb_compare",
    version: 1,
    columns: &[
        col("index", Int),
        col("continuum_energy", Float),
        col("tb_energy", Float),
    ],
    variadic_prefix: None,
};

pub const ALL: &[&TableSchema] = &[
    &ENERGIES,
    &DIAGNOSTICS,
    &HISTOGRAM,
    &STATS_SUMMARY,
    &FIG1_MAP,
    &FIG2_SCALING,
    &FIG3_STATS,
    &FIG4_TV,
    &TB_ONSITE,
    &TB_COMPARE,
];

pub fn lookup(kind: &str) -> Option<&'static TableSchema> {
    ALL.iter().copied().find(|s| s.kind == kind)
}

impl TableSchema {
    pub fn version_line(&self) -> String {
        format!("# scarloc:{} v{}", self.kind, self.version)
    }

    pub fn header(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.to_string()).collect()
    }
}

/// Builds a table in memory; cells are written verbatim.
#[derive(Debug, Clone)]
pub struct TableWriter {
    text: String,
    width: usize,
}

impl TableWriter {
    pub fn new(schema: &TableSchema) -> Self {
        Self::with_header(schema, &schema.header())
    }

    /// For schemas with variadic trailing columns.
    pub fn with_header(schema: &TableSchema, header: &[String]) -> Self {
        let mut text = schema.version_line();
        text.push('\n');
        text.push_str(&header.join(","));
        text.push('\n');
        Self {
            text,
            width: header.len(),
        }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        assert_eq!(cells.len(), self.width, "row width does not match header");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(c.as_ref());
        }
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }

    pub fn write(self, path: &Path) -> Result<()> {
        std::fs::write(path, self.text).map_err(|e| Error::io(path, e))
    }
}

pub fn fmt_f64(v: f64) -> String {
    let mut s = String::new();
    write!(s, "{v}").unwrap();
    s
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// A parsed, validated table.
#[derive(Debug, Clone)]
pub struct Table {
    pub schema: &'static TableSchema,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn floats(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let c = self.column(name)?;
        Some(self.rows.iter().map(|r| r[c].parse().ok()).collect())
    }
}

/// Parses and validates `text` against the schema named in its version line.
pub fn check_table(text: &str) -> std::result::Result<Table, String> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or("empty file")?;
    let tag = first
        .strip_prefix("# scarloc:")
        .ok_or("missing `# scarloc:<kind> v<version>` line")?;
    let (kind, version) = tag.split_once(" v").ok_or("malformed version line")?;
    let schema = lookup(kind).ok_or_else(|| format!("unknown table kind `{kind}`"))?;
    let version: u32 = version.parse().map_err(|_| "malformed version number")?;
    if version != schema.version {
        return Err(format!(
            "{kind} version {version} is not supported (expected {})",
            schema.version
        ));
    }
    let (_, header_line) = lines.next().ok_or("missing header row")?;
    let header: Vec<String> = header_line.split(',').map(str::to_string).collect();
    let fixed = schema.columns.len();
    if header.len() < fixed || header[..fixed].iter().zip(schema.columns).any(|(h, c)| h != c.name) {
        return Err(format!("header must start with {}", schema.header().join(",")));
    }
    let mut types: Vec<ColumnType> = schema.columns.iter().map(|c| c.ty).collect();
    for extra in &header[fixed..] {
        match schema.variadic_prefix {
            Some(p) if extra.starts_with(p) => types.push(OptFloat),
            _ => return Err(format!("unexpected column `{extra}`")),
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        let cells: Vec<String> = line.split(',').map(str::to_string).collect();
        if cells.len() != header.len() {
            return Err(format!(
                "line {}: expected {} cells, found {}",
                lineno + 1,
                header.len(),
                cells.len()
            ));
        }
        for ((cell, ty), name) in cells.iter().zip(&types).zip(&header) {
            let ok = match ty {
                Int => cell.parse::<i64>().is_ok(),
                Float => cell.parse::<f64>().is_ok(),
                OptFloat => cell.is_empty() || cell.parse::<f64>().is_ok(),
                Text => !cell.is_empty(),
                OptText => true,
            };
            if !ok {
                return Err(format!(
                    "line {}: column `{name}` has invalid value `{cell}`",
                    lineno + 1
                ));
            }
        }
        rows.push(cells);
    }
    Ok(Table { schema, header, rows })
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    check_table(&text).map_err(|reason| Error::format(path, reason))
}

/// Reads a table and insists on its kind.
pub fn read_table_of(path: &Path, schema: &TableSchema) -> Result<Table> {
    let table = read_table(path)?;
    if table.schema.kind != schema.kind {
        return Err(Error::format(
            path,
            format!("expected a {} table, found {}", schema.kind, table.schema.kind),
        ));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut w = TableWriter::new(&ENERGIES);
        w.row(&["0", "1.5", "1e-9"]);
        w.row(&["1", "2.5", "3e-10"]);
        let t = check_table(&w.finish()).unwrap();
        assert_eq!(t.schema.kind, "energies");
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.floats("energy").unwrap(), vec![Some(1.5), Some(2.5)]);
    }

    #[test]
    fn rejects_bad_cells() {
        let text = "# scarloc:energies v1\nindex,energy,residual\n0,abc,1\n";
        assert!(check_table(text).unwrap_err().contains("energy"));
        let text = "# scarloc:energies v1\nindex,energy,residual\n0,1\n";
        assert!(check_table(text).is_err());
        let text = "# scarloc:energies v2\nindex,energy,residual\n";
        assert!(check_table(text).is_err());
        let text = "index,energy,residual\n";
        assert!(check_table(text).is_err());
        let text = "# scarloc:energies v1\nindex,energy\n";
        assert!(check_table(text).is_err());
    }

    #[test]
    fn variadic_columns() {
        let mut header = DIAGNOSTICS.header();
        header.push("ipr_q3".into());
        let w = TableWriter::with_header(&DIAGNOSTICS, &header);
        assert!(check_table(&w.finish()).is_ok());
        header.push("bogus".into());
        let w = TableWriter::with_header(&DIAGNOSTICS, &header);
        assert!(check_table(&w.finish()).is_err());
    }

    #[test]
    fn kinds_are_unique() {
        for (i, a) in ALL.iter().enumerate() {
            for b in &ALL[i + 1..] {
                assert_ne!(a.kind, b.kind);
            }
        }
    }
}

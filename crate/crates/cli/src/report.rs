use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    /// Shortest round-trip text, so reports are reproducible byte for byte.
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:e}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn short(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.4e}"),
            other => other.csv(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => json!(v.to_string()),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

/// A named pass/fail statement about the run.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: &'static str,
    pub run_id: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub checks: Vec<Check>,
    /// Column pair (x, y) and whether both axes are logarithmic, for plot scripts.
    pub plot: Option<(&'static str, &'static str, bool)>,
}

impl Report {
    pub fn new(command: &'static str, run_id: &str, columns: &[&'static str]) -> Self {
        let mut cols = vec!["run_id"];
        cols.extend_from_slice(columns);
        Report { command, run_id: run_id.to_string(), columns: cols, rows: Vec::new(), checks: Vec::new(), plot: None }
    }

    pub fn push(&mut self, cells: Vec<Cell>) {
        let mut row = vec![Cell::Text(self.run_id.clone())];
        row.extend(cells);
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_string(), passed, detail: detail.into() });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::csv))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (c, v) in self.columns.iter().zip(row) {
                    obj.insert(c.to_string(), v.json());
                }
                Value::Object(obj)
            })
            .collect();
        let checks: Vec<Value> =
            self.checks.iter().map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail})).collect();
        json!({"command": self.command, "run_id": self.run_id, "rows": rows, "checks": checks})
    }

    pub fn text_table(&self) -> String {
        // the run id is in the header line, not in every row
        let cols = &self.columns[1..];
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r[1..].iter().map(Cell::short).collect()).collect();
        let widths: Vec<usize> = (0..cols.len())
            .map(|j| cells.iter().map(|r| r[j].len()).chain([cols[j].len()]).max().unwrap_or(0))
            .collect();
        let mut out = format!("{} run {}\n", self.command, self.run_id);
        let line = |items: Vec<&str>| {
            items.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect::<Vec<_>>().join("  ") + "\n"
        };
        out += &line(cols.to_vec());
        for r in &cells {
            out += &line(r.iter().map(String::as_str).collect());
        }
        for c in &self.checks {
            out += &format!("{} {}: {}\n", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
        }
        out
    }

    pub fn plot_script(&self, csv_path: &Path) -> Option<String> {
        let (x, y, log) = self.plot?;
        let scale = if log { "ax.set_xscale(\"log\")\nax.set_yscale(\"log\")\n" } else { "ax.set_yscale(\"log\")\n" };
        Some(format!(
            "import csv\nimport matplotlib.pyplot as plt\n\n\
             with open({path:?}) as fh:\n    rows = list(csv.DictReader(fh))\n\
             xs = [float(r[{x:?}]) for r in rows]\n\
             ys = [float(r[{y:?}]) for r in rows]\n\n\
             fig, ax = plt.subplots()\n\
             ax.plot(xs, ys, \"o-\")\n\
             {scale}\
             ax.set_xlabel({x:?})\n\
             ax.set_ylabel({y:?})\n\
             ax.set_title(\"{cmd} {id}\")\n\
             fig.savefig({png:?}, dpi=150)\n",
            path = csv_path.display().to_string(),
            png = csv_path.with_extension("png").display().to_string(),
            cmd = self.command,
            id = self.run_id,
        ))
    }
}

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::responses::csv_escape;
use super::{csv_reader, field, fmt_f64, location, read_to_string, record_line, write_string, Header};
use crate::error::{Error, Result};

/// Per-model covariates. Optional fields are `None` when the cell is blank.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ModelMeta {
    pub model_id: String,
    pub company: String,
    pub architecture: Option<String>,
    pub params_billions: Option<f64>,
    pub generation: Option<i64>,
    pub is_moe: Option<bool>,
    pub latest_model: Option<bool>,
    pub correlation_with_human_score: Option<f64>,
}

impl ModelMeta {
    pub fn new(model_id: impl Into<String>, company: impl Into<String>) -> Self {
        ModelMeta {
            model_id: model_id.into(),
            company: company.into(),
            ..Default::default()
        }
    }
}

/// Metadata rows keyed by model id, plus non-fatal warnings raised while
/// loading or cross-referencing.
#[derive(Debug, Clone, Default)]
pub struct MetadataTable {
    models: Vec<ModelMeta>,
    index: HashMap<String, usize>,
    pub warnings: Vec<String>,
}

const KNOWN: [&str; 8] = [
    "model_id",
    "company",
    "architecture",
    "params_billions",
    "generation",
    "is_moe",
    "latest_model",
    "correlation_with_human_score",
];

impl MetadataTable {
    pub fn new(models: Vec<ModelMeta>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, m) in models.iter().enumerate() {
            if index.insert(m.model_id.clone(), i).is_some() {
                return Err(Error::DuplicateModelId(m.model_id.clone()));
            }
            if let Some(p) = m.params_billions {
                if !(p > 0.0) {
                    return Err(Error::schema(
                        format!("model {}", m.model_id),
                        "params_billions must be positive",
                    ));
                }
            }
        }
        Ok(MetadataTable {
            models,
            index,
            warnings: Vec::new(),
        })
    }

    pub fn get(&self, model: &str) -> Option<&ModelMeta> {
        self.index.get(model).map(|&i| &self.models[i])
    }

    pub fn models(&self) -> &[ModelMeta] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Warn about metadata rows whose model appears in none of `datasets`.
    /// The warnings are logged, appended to `self.warnings` and returned.
    pub fn cross_reference(&mut self, datasets: &[&[String]]) -> Vec<String> {
        let mut new = Vec::new();
        for m in &self.models {
            let present = datasets.iter().any(|ids| ids.iter().any(|id| id == &m.model_id));
            if !present {
                let w = format!("metadata model `{}` does not appear in any dataset", m.model_id);
                log::warn!("{w}");
                new.push(w);
            }
        }
        self.warnings.extend(new.iter().cloned());
        new
    }
}

fn parse_bool(s: &str, loc: &str, col: &str) -> Result<Option<bool>> {
    match s.to_ascii_lowercase().as_str() {
        "" => Ok(None),
        "true" | "t" | "1" | "yes" => Ok(Some(true)),
        "false" | "f" | "0" | "no" => Ok(Some(false)),
        _ => Err(Error::parse(loc, format!("`{col}` expects a boolean, got `{s}`"))),
    }
}

fn parse_opt<T: std::str::FromStr>(s: &str, loc: &str, col: &str) -> Result<Option<T>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<T>()
        .map(Some)
        .map_err(|_| Error::parse(loc, format!("cannot parse `{col}` value `{s}`")))
}

/// Load a metadata CSV. Columns are matched by header name; unknown columns
/// are ignored with a warning and absent optional columns leave fields empty.
pub fn load_metadata(path: &Path) -> Result<MetadataTable> {
    let text = read_to_string(path)?;
    let mut rdr = csv_reader(&text);
    let header = Header::new(rdr.headers().map_err(|e| Error::parse(location(path, 1), e.to_string()))?);
    let c_id = header.require("model_id", path)?;
    let c_company = header.require("company", path)?;
    let col = |n: &str| header.find(n);
    let (c_arch, c_params, c_gen, c_moe, c_latest, c_corr) = (
        col("architecture"),
        col("params_billions"),
        col("generation"),
        col("is_moe"),
        col("latest_model"),
        col("correlation_with_human_score"),
    );
    let mut warnings = Vec::new();
    for name in header.names() {
        if !name.is_empty() && !KNOWN.contains(&name.as_str()) {
            let w = format!("{}: ignoring unknown column `{name}`", path.display());
            log::warn!("{w}");
            warnings.push(w);
        }
    }

    let mut models = Vec::new();
    let mut seen = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        let loc = location(path, record_line(&rec));
        let get = |c: Option<usize>| c.map(|c| field(&rec, c)).unwrap_or("");
        let model_id = field(&rec, c_id).to_string();
        if model_id.is_empty() {
            return Err(Error::schema(&loc, "empty model_id"));
        }
        if seen.insert(model_id.clone(), ()).is_some() {
            return Err(Error::DuplicateModelId(model_id));
        }
        let params_billions: Option<f64> = parse_opt(get(c_params), &loc, "params_billions")?;
        if let Some(p) = params_billions {
            if !(p > 0.0) {
                return Err(Error::schema(&loc, format!("params_billions must be positive, got {p}")));
            }
        }
        let corr: Option<f64> = parse_opt(get(c_corr), &loc, "correlation_with_human_score")?;
        if let Some(c) = corr {
            if !(-1.0..=1.0).contains(&c) {
                return Err(Error::schema(&loc, format!("correlation {c} outside [-1, 1]")));
            }
        }
        let arch = get(c_arch);
        models.push(ModelMeta {
            model_id,
            company: field(&rec, c_company).to_string(),
            architecture: (!arch.is_empty()).then(|| arch.to_string()),
            params_billions,
            generation: parse_opt(get(c_gen), &loc, "generation")?,
            is_moe: parse_bool(get(c_moe), &loc, "is_moe")?,
            latest_model: parse_bool(get(c_latest), &loc, "latest_model")?,
            correlation_with_human_score: corr,
        });
    }
    let mut table = MetadataTable::new(models)?;
    table.warnings = warnings;
    Ok(table)
}

fn fmt_bool(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "True",
        Some(false) => "False",
        None => "",
    }
}

pub fn save_metadata(table: &MetadataTable, path: &Path) -> Result<()> {
    let mut out = KNOWN.join(",");
    out.push('\n');
    for m in &table.models {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            csv_escape(&m.model_id),
            csv_escape(&m.company),
            m.architecture.as_deref().map(csv_escape).unwrap_or_default(),
            m.params_billions.map(fmt_f64).unwrap_or_default(),
            m.generation.map(|g| g.to_string()).unwrap_or_default(),
            fmt_bool(m.is_moe),
            fmt_bool(m.latest_model),
            m.correlation_with_human_score.map(fmt_f64).unwrap_or_default(),
        )
        .unwrap();
    }
    write_string(path, &out)
}

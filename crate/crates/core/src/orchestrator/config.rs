use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{Baseline, DEFAULT_TARGET_SIZE};
use crate::corpus::{CodeSystem, EventSchema};
use crate::error::{Error, Result};
use crate::fidelity::DiscriminatorCv;
use crate::ml::{L2Penalty, DEFAULT_HIGH_DIM_L2};
use crate::privacy::{ImbalancedRule, DEFAULT_HIST_BINS};
use crate::utility::{OutcomeSpec, DEFAULT_OUTCOME};

/// Synthetic sizes swept by default along the M axis.
pub const DEFAULT_M_GRID: [usize; 9] = [
    1_000, 2_000, 5_000, 10_000, 20_000, 50_000, 100_000, 200_000, 500_000,
];

/// Training sizes swept by default along the N axis.
pub const DEFAULT_N_GRID: [usize; 10] = [
    1_000, 2_000, 5_000, 10_000, 15_000, 20_000, 25_000, 30_000, 35_000, 40_000,
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    /// `report.json` only.
    #[default]
    Json,
    /// `report.json` plus a flattened one-row `report.csv`.
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub path: PathBuf,
    pub source: CodeSystem,
    pub target: CodeSystem,
}

/// Where one side of the comparison comes from: a matrix file, an event
/// CSV (optionally mapped and truncated), or, for the synthetic side, a
/// built-in baseline fitted to the real data.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub matrix: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub schema: EventSchema,
    pub maps: Vec<MapConfig>,
    pub truncate: bool,
    pub demographics: Option<PathBuf>,
    pub cohort: Option<String>,
    pub baseline: Option<Baseline>,
    /// Rows to generate for a baseline (M).
    pub size: Option<usize>,
    /// Fit the baseline to the real events before mapping, then map the
    /// generated records through the same chain.
    pub generate_before_mapping: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VocabPolicyKind {
    #[default]
    FromData,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabConfig {
    pub policy: VocabPolicyKind,
    /// Whitespace-separated codes, required for the fixed policy.
    pub path: Option<PathBuf>,
    pub min_patients: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FidelityConfig {
    pub enabled: bool,
    pub k_folds: usize,
    pub discriminative: bool,
    pub cv: DiscriminatorCv,
    pub l2: L2Penalty,
    pub prevalence_table: bool,
}

impl Default for FidelityConfig {
    fn default() -> Self {
        FidelityConfig {
            enabled: true,
            k_folds: 5,
            discriminative: true,
            cv: DiscriminatorCv::default(),
            l2: DEFAULT_HIGH_DIM_L2,
            prevalence_table: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticalTask {
    pub outcome: OutcomeSpec,
    pub predictor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtilityConfig {
    pub enabled: bool,
    pub outcome: OutcomeSpec,
    pub test_fraction: f64,
    pub stratified: bool,
    pub l2: L2Penalty,
    pub analytical: Vec<AnalyticalTask>,
    /// Codes in the per-code TSTR sweep; 0 turns it off.
    pub sweep: usize,
    pub sweep_min_prev: f64,
    pub sweep_codes: Option<Vec<String>>,
}

impl Default for UtilityConfig {
    fn default() -> Self {
        UtilityConfig {
            enabled: true,
            outcome: OutcomeSpec::Code(DEFAULT_OUTCOME.into()),
            test_fraction: 0.2,
            stratified: true,
            l2: DEFAULT_HIGH_DIM_L2,
            analytical: Vec::new(),
            sweep: 0,
            sweep_min_prev: 0.1,
            sweep_codes: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivacyConfig {
    pub enabled: bool,
    pub mir: bool,
    pub air: bool,
    pub hist_bins: usize,
    pub n_balanced: usize,
    pub n_imbalanced: usize,
    pub imbalanced_rule: ImbalancedRule,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        PrivacyConfig {
            enabled: true,
            mir: true,
            air: true,
            hist_bins: DEFAULT_HIST_BINS,
            n_balanced: 10,
            n_imbalanced: 10,
            imbalanced_rule: ImbalancedRule::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingAxis {
    /// Vary the synthetic size M with the generator fitted to all real rows.
    SynthSize,
    /// Vary the number of real rows N the generator sees; M stays fixed.
    TrainSize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub axis: ScalingAxis,
    pub grid: Option<Vec<usize>>,
    pub replicates: usize,
    pub baseline: Baseline,
    /// M used at every point of the N axis.
    pub synth_size: usize,
    /// Pre-generated matrices per grid point (key = grid value); one file
    /// per replicate. Replaces the built-in baseline.
    pub external: BTreeMap<String, Vec<PathBuf>>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            axis: ScalingAxis::SynthSize,
            grid: None,
            replicates: 5,
            baseline: Baseline::Resample,
            synth_size: DEFAULT_TARGET_SIZE,
            external: BTreeMap::new(),
        }
    }
}

impl ScalingConfig {
    pub fn grid_values(&self) -> Vec<usize> {
        match (&self.grid, self.axis) {
            (Some(g), _) => g.clone(),
            (None, ScalingAxis::SynthSize) => DEFAULT_M_GRID.to_vec(),
            (None, ScalingAxis::TrainSize) => DEFAULT_N_GRID.to_vec(),
        }
    }
}

/// A full benchmarking run, read from TOML.
///
/// Relative paths resolve against the directory of the config file.
/// `workers` and `output_dir` do not enter the config hash: they change
/// where and how fast a run happens, not what it computes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
    pub output_dir: PathBuf,
    pub format: ReportFormat,
    /// Label used in reports and rankings; defaults to the synthetic
    /// baseline name or matrix file stem.
    pub method: Option<String>,
    pub real: DatasetConfig,
    pub synthetic: DatasetConfig,
    pub vocab: VocabConfig,
    pub fidelity: FidelityConfig,
    pub utility: UtilityConfig,
    pub privacy: PrivacyConfig,
    pub scaling: Option<ScalingConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            workers: None,
            output_dir: PathBuf::from("synthbench-out"),
            format: ReportFormat::default(),
            method: None,
            real: DatasetConfig::default(),
            synthetic: DatasetConfig::default(),
            vocab: VocabConfig::default(),
            fidelity: FidelityConfig::default(),
            utility: UtilityConfig::default(),
            privacy: PrivacyConfig::default(),
            scaling: None,
            base_dir: PathBuf::new(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("cannot serialize config: {e}")))
    }

    /// `path` made absolute against the config file's directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn validate(&self) -> Result<()> {
        let count = |d: &DatasetConfig| {
            [d.matrix.is_some(), d.events.is_some(), d.baseline.is_some()]
                .iter()
                .filter(|&&b| b)
                .count()
        };
        if count(&self.real) != 1 || self.real.baseline.is_some() {
            return Err(Error::config("[real] needs exactly one of `matrix` or `events`"));
        }
        if count(&self.synthetic) != 1 {
            return Err(Error::config(
                "[synthetic] needs exactly one of `matrix`, `events` or `baseline`",
            ));
        }
        for (side, d) in [("real", &self.real), ("synthetic", &self.synthetic)] {
            if d.matrix.is_some() && (!d.maps.is_empty() || d.truncate) {
                return Err(Error::config(format!(
                    "[{side}] maps and truncate apply to events, not to a matrix"
                )));
            }
            if d.cohort.is_some() != d.demographics.is_some() {
                return Err(Error::config(format!(
                    "[{side}] cohort and demographics must be given together"
                )));
            }
        }
        if self.synthetic.generate_before_mapping
            && (self.synthetic.baseline.is_none() || self.real.events.is_none())
        {
            return Err(Error::config(
                "generate_before_mapping needs a baseline and real events",
            ));
        }
        if self.synthetic.size == Some(0) {
            return Err(Error::config("synthetic size must be at least 1"));
        }
        if self.vocab.policy == VocabPolicyKind::Fixed && self.vocab.path.is_none() {
            return Err(Error::config("fixed vocabulary policy needs `vocab.path`"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers must be at least 1"));
        }
        if self.fidelity.k_folds < 2 {
            return Err(Error::config("fidelity.k_folds must be at least 2"));
        }
        if !(self.utility.test_fraction > 0.0 && self.utility.test_fraction < 1.0) {
            return Err(Error::config("utility.test_fraction must lie in (0, 1)"));
        }
        if self.privacy.hist_bins == 0 {
            return Err(Error::config("privacy.hist_bins must be at least 1"));
        }
        if let Some(s) = &self.scaling {
            if s.replicates == 0 || s.grid_values().is_empty() {
                return Err(Error::config("scaling needs a nonempty grid and replicates >= 1"));
            }
        }
        Ok(())
    }

    /// Hex sha256 of the canonical JSON form, without `workers` and
    /// `output_dir`.
    pub fn config_hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("workers");
            obj.remove("output_dir");
        }
        let bytes = serde_json::to_vec(&value).expect("value serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Name used for this run's synthetic data in reports.
    pub fn method_name(&self) -> String {
        if let Some(m) = &self.method {
            return m.clone();
        }
        if let Some(b) = self.synthetic.baseline {
            return format!("{b:?}").to_ascii_lowercase();
        }
        self.synthetic
            .matrix
            .as_ref()
            .or(self.synthetic.events.as_ref())
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "synthetic".into())
    }
}

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dpp::{PowerModel, DEFAULT_M_MAX, DEFAULT_T_AUDIO};
use crate::error::{Error, Result};
use crate::filterbank::{
    design_bank_with_lpf, FilterBankSpec, FixedPointFormat, DEFAULT_F_HIGH, DEFAULT_F_LOW,
    DEFAULT_LPF_CUTOFF, DEFAULT_LPF_SECTIONS, DEFAULT_N_BANDS,
};
use crate::scheduler::CostModel;
use crate::signal::{FramePlan, FramingStrategy, DEFAULT_PRE_EMPHASIS, DEFAULT_SAMPLE_RATE};
use crate::sparsity::{StrideConfig, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_TH1_EXP, DEFAULT_TH2_RATIO};

/// Front-end configuration. Stored on disk as flat `key = value` lines
/// (TOML without tables); missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub sample_rate: u32,
    pub frame_len_ms: f64,
    pub framing: FramingStrategy,
    /// Overrides the hop derived from `framing`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hop: Option<usize>,
    pub n_bands: usize,
    pub f_low: f64,
    pub f_high: f64,
    pub lpf_cutoff: f64,
    pub lpf_sections: usize,
    pub th1_exp: u32,
    pub th2_ratio: f64,
    pub alpha: f64,
    pub beta: f64,
    pub pre_emphasis: f64,
    pub fixed_point: bool,
    /// Filters in the cluster.
    pub filters: u32,
    pub m_max: u32,
    pub channels: u32,
    pub clock_hz: f64,
    pub cycles_per_sample_per_band: u64,
    pub pipeline_fill: u64,
    pub lpf_cycles_per_sample: u64,
    pub pre_emphasis_cycles_per_sample: u64,
    pub p_static: f64,
    pub p_per_filter: f64,
    pub t_audio: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let cost = CostModel::default();
        let power = PowerModel::default();
        Self {
            sample_rate: DEFAULT_SAMPLE_RATE,
            frame_len_ms: 16.0,
            framing: FramingStrategy::HalfOverlapped,
            hop: None,
            n_bands: DEFAULT_N_BANDS,
            f_low: DEFAULT_F_LOW,
            f_high: DEFAULT_F_HIGH,
            lpf_cutoff: DEFAULT_LPF_CUTOFF,
            lpf_sections: DEFAULT_LPF_SECTIONS,
            th1_exp: DEFAULT_TH1_EXP,
            th2_ratio: DEFAULT_TH2_RATIO,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            pre_emphasis: DEFAULT_PRE_EMPHASIS,
            fixed_point: true,
            filters: 15,
            m_max: DEFAULT_M_MAX,
            channels: 1,
            clock_hz: cost.clock_hz,
            cycles_per_sample_per_band: cost.cycles_per_sample_per_band,
            pipeline_fill: cost.pipeline_fill,
            lpf_cycles_per_sample: cost.lpf_cycles_per_sample,
            pre_emphasis_cycles_per_sample: cost.pre_emphasis_cycles_per_sample,
            p_static: power.p_static,
            p_per_filter: power.p_per_filter,
            t_audio: DEFAULT_T_AUDIO,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes as flat TOML")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 || !(self.frame_len_ms > 0.0) || self.frame_len() == 0 {
            return Err(Error::invalid("sample_rate and frame_len_ms must be positive"));
        }
        if self.filters == 0 || self.m_max == 0 || self.channels == 0 {
            return Err(Error::invalid("filters, m_max and channels must be positive"));
        }
        if !(0.0..1.0).contains(&self.pre_emphasis) {
            return Err(Error::invalid("pre_emphasis must lie in [0, 1)"));
        }
        if self.alpha < 0.0 || self.beta < 0.0 || self.th2_ratio < 0.0 {
            return Err(Error::invalid("alpha, beta and th2_ratio must be non-negative"));
        }
        if !(self.t_audio > 0.0) {
            return Err(Error::invalid("t_audio must be positive"));
        }
        self.frame_plan()?;
        self.cost_model().validate()?;
        self.power_model().validate()
    }

    pub fn frame_len(&self) -> usize {
        (self.frame_len_ms * self.sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn frame_plan(&self) -> Result<FramePlan> {
        let plan = FramePlan::new(self.framing, self.frame_len())?;
        match self.hop {
            Some(h) => plan.with_hop(h),
            None => Ok(plan),
        }
    }

    pub fn stride_config(&self) -> StrideConfig {
        StrideConfig {
            th1_exp: self.th1_exp,
            th2_ratio: self.th2_ratio,
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    pub fn cost_model(&self) -> CostModel {
        CostModel {
            cycles_per_sample_per_band: self.cycles_per_sample_per_band,
            n_bands: self.n_bands as u64,
            pipeline_fill: self.pipeline_fill,
            lpf_cycles_per_sample: self.lpf_cycles_per_sample,
            pre_emphasis_cycles_per_sample: self.pre_emphasis_cycles_per_sample,
            clock_hz: self.clock_hz,
        }
    }

    pub fn power_model(&self) -> PowerModel {
        PowerModel {
            p_static: self.p_static,
            p_per_filter: self.p_per_filter,
        }
    }

    pub fn fixed_format(&self) -> Option<FixedPointFormat> {
        self.fixed_point.then(FixedPointFormat::default)
    }

    pub fn filter_bank(&self) -> Result<FilterBankSpec> {
        design_bank_with_lpf(
            self.n_bands,
            self.f_low,
            self.f_high,
            self.sample_rate,
            self.lpf_sections,
            self.lpf_cutoff,
        )
    }

    /// Per-channel real-time budget `T_audio / N`.
    pub fn budget_s(&self) -> f64 {
        self.t_audio / self.channels as f64
    }
}

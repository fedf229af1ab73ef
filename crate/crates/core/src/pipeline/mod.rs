//! End-to-end front end: clip in, feature matrix and run report out.

mod config;
mod features;
mod wav;

pub use config::PipelineConfig;
pub use features::{
    read_binary, read_csv, read_features, write_binary, write_csv, write_features, FeatureFormat,
    MAGIC, VERSION,
};
pub use wav::{load_wav, load_wav_expecting, read_wav_expecting, save_wav, write_wav_to};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{
    apply_lpf, band_energies, log2_feature, stride2_decimate, FeatureMatrix, FilterBankSpec,
    FixedPointFormat, Log2Lut,
};
use crate::scheduler::{assign_priorities, simulate, ScheduleTrace};
use crate::signal::{
    make_frames, pre_emphasize, window, AudioClip, FramePlan, FramingStrategy, PCM_FULL_SCALE,
};
use crate::sparsity::{build_stride_plan, short_time_energy, BoundaryEnergy, Stride, StridePlan};

/// Per-channel outcome of one front-end pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub channel_id: u16,
    pub n_samples: usize,
    pub framing: FramingStrategy,
    pub frame_len: usize,
    pub hop: usize,
    pub frames_total: usize,
    pub frames_skipped: usize,
    pub frames_stride1: usize,
    pub frames_stride2: usize,
    pub th1: f64,
    pub th2: f64,
    pub processed_samples: usize,
    /// Samples a fully overlapped, unskipped, stride-1 pass would filter.
    pub baseline_samples: usize,
    pub reduction_pct: f64,
    pub filters: u32,
    pub prologue_cycles: u64,
    pub makespan_cycles: u64,
    pub latency_s: f64,
    pub utilization: f64,
    pub budget_s: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub features: FeatureMatrix,
    pub plan: StridePlan,
    pub trace: ScheduleTrace,
    pub report: RunReport,
}

/// A configured front end. The filter bank is designed once and shared by
/// every clip.
#[derive(Debug, Clone)]
pub struct FrontEnd {
    config: PipelineConfig,
    frame_plan: FramePlan,
    bank: FilterBankSpec,
    fmt: Option<FixedPointFormat>,
    lut: Log2Lut,
}

fn normalized(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v / PCM_FULL_SCALE).collect()
}

impl FrontEnd {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            frame_plan: config.frame_plan()?,
            bank: config.filter_bank()?,
            fmt: config.fixed_format(),
            lut: Log2Lut::default(),
            config,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn bank(&self) -> &FilterBankSpec {
        &self.bank
    }

    pub fn frame_plan(&self) -> &FramePlan {
        &self.frame_plan
    }

    fn check_clip(&self, clip: &AudioClip) -> Result<()> {
        clip.validate()?;
        if clip.sample_rate != self.config.sample_rate {
            return Err(Error::Format {
                field: "sample_rate",
                detail: format!("expected {} Hz, got {}", self.config.sample_rate, clip.sample_rate),
            });
        }
        Ok(())
    }

    /// Frames and stride labels for a clip; boost factors still at fallback.
    pub fn stride_plan(&self, clip: &AudioClip) -> Result<StridePlan> {
        self.check_clip(clip)?;
        let frames = make_frames(clip, &self.frame_plan)?;
        Ok(build_stride_plan(&frames, &self.config.stride_config()).with_clip_len(clip.len()))
    }

    /// Low-pass filtered, decimated raw frame, in PCM units.
    fn half_rate_input(&self, raw: &[f64]) -> Result<Vec<f64>> {
        Ok(stride2_decimate(&apply_lpf(raw, &self.bank, self.fmt.as_ref())?))
    }

    pub fn extract(&self, clip: &AudioClip) -> Result<Extraction> {
        self.check_clip(clip)?;
        let frames = make_frames(clip, &self.frame_plan)?;
        let mut plan =
            build_stride_plan(&frames, &self.config.stride_config()).with_clip_len(clip.len());
        let emphasized = pre_emphasize(clip, self.config.pre_emphasis)?;
        let fmt = self.fmt.as_ref();

        let mut half_inputs: Vec<Option<Vec<f64>>> = vec![None; frames.len()];
        let mut half_input = |i: usize| -> Result<Vec<f64>> {
            if half_inputs[i].is_none() {
                half_inputs[i] = Some(self.half_rate_input(&frames[i].as_f64())?);
            }
            Ok(half_inputs[i].clone().unwrap())
        };

        let mut boundary_err = None;
        plan.assign_boost(|i| {
            let stride1 = short_time_energy(&frames[i].normalized());
            let stride2 = match half_input(i) {
                Ok(d) => short_time_energy(&normalized(&d)),
                Err(e) => {
                    boundary_err.get_or_insert(e);
                    0.0
                }
            };
            BoundaryEnergy { stride1, stride2 }
        });
        if let Some(e) = boundary_err {
            return Err(e);
        }

        let mut features = FeatureMatrix::new(self.bank.n_bands);
        for (i, frame) in frames.iter().enumerate() {
            let energies = match plan.strides[i] {
                Stride::Skip => continue,
                Stride::Full => {
                    let x: Vec<f64> = window(&emphasized.samples, frame.start, frame.len())
                        .iter()
                        .map(|&v| v as f64)
                        .collect();
                    band_energies(&x, Stride::Full, &self.bank, fmt)?
                }
                Stride::Half => {
                    let g = plan.boost_factors[i].expect("stride-2 frames carry a boost");
                    band_energies(&half_input(i)?, Stride::Half, &self.bank, fmt)?
                        .into_iter()
                        .map(|e| e * g)
                        .collect()
                }
            };
            let values = log2_feature(&energies, &self.lut)
                .into_iter()
                .map(|v| v as f32)
                .collect();
            features.push(frame.index as u32, plan.strides[i], values)?;
        }

        let trace = self.schedule(&plan, self.config.filters)?;
        let report = self.report(clip, &plan, &trace);
        Ok(Extraction {
            features,
            plan,
            trace,
            report,
        })
    }

    pub fn schedule(&self, plan: &StridePlan, m: u32) -> Result<ScheduleTrace> {
        simulate(&assign_priorities(plan), m as usize, &self.config.cost_model())
    }

    fn report(&self, clip: &AudioClip, plan: &StridePlan, trace: &ScheduleTrace) -> RunReport {
        let cost = self.config.cost_model();
        let baseline = FramePlan::new(FramingStrategy::FullyOverlapped, self.frame_plan.frame_len)
            .expect("frame length already validated")
            .processed_samples(clip.len());
        let processed = plan.processed_samples();
        let prologue = cost.prologue_cycles(clip.len());
        let latency_s = cost.seconds(prologue + trace.makespan);
        let budget_s = self.config.budget_s();
        RunReport {
            channel_id: clip.channel_id,
            n_samples: clip.len(),
            framing: self.frame_plan.strategy,
            frame_len: self.frame_plan.frame_len,
            hop: self.frame_plan.hop,
            frames_total: plan.n_frames(),
            frames_skipped: plan.count(Stride::Skip),
            frames_stride1: plan.count(Stride::Full),
            frames_stride2: plan.count(Stride::Half),
            th1: plan.th1,
            th2: plan.th2,
            processed_samples: processed,
            baseline_samples: baseline,
            reduction_pct: reduction_pct(processed, baseline),
            filters: self.config.filters,
            prologue_cycles: prologue,
            makespan_cycles: trace.makespan,
            latency_s,
            utilization: trace.utilization(),
            budget_s,
            feasible: latency_s <= budget_s,
        }
    }
}

fn reduction_pct(processed: usize, baseline: usize) -> f64 {
    if baseline == 0 {
        return 0.0;
    }
    (100.0 * (1.0 - processed as f64 / baseline as f64)).clamp(0.0, 100.0)
}

pub fn extract(clip: &AudioClip, config: &PipelineConfig) -> Result<(FeatureMatrix, RunReport)> {
    let ex = FrontEnd::new(config.clone())?.extract(clip)?;
    Ok((ex.features, ex.report))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrideHistogram {
    pub skipped: usize,
    pub stride1: usize,
    pub stride2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipEntry {
    pub name: String,
    #[serde(flatten)]
    pub report: RunReport,
}

/// Aggregate over a corpus. `mean_reduction_pct` averages the per-clip
/// figures; `pooled_reduction_pct` weights every sample equally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub n_clips: usize,
    pub mean_reduction_pct: f64,
    pub pooled_reduction_pct: f64,
    pub min_reduction_pct: f64,
    pub max_reduction_pct: f64,
    pub stride_histogram: StrideHistogram,
    pub all_feasible: bool,
    pub clips: Vec<ClipEntry>,
}

impl CorpusReport {
    pub fn from_entries(clips: Vec<ClipEntry>) -> Result<Self> {
        if clips.is_empty() {
            return Err(Error::invalid("corpus is empty"));
        }
        let n = clips.len();
        let r: Vec<f64> = clips.iter().map(|c| c.report.reduction_pct).collect();
        let processed: usize = clips.iter().map(|c| c.report.processed_samples).sum();
        let baseline: usize = clips.iter().map(|c| c.report.baseline_samples).sum();
        let mut hist = StrideHistogram::default();
        for c in &clips {
            hist.skipped += c.report.frames_skipped;
            hist.stride1 += c.report.frames_stride1;
            hist.stride2 += c.report.frames_stride2;
        }
        Ok(Self {
            n_clips: n,
            mean_reduction_pct: r.iter().sum::<f64>() / n as f64,
            pooled_reduction_pct: reduction_pct(processed, baseline),
            min_reduction_pct: r.iter().copied().fold(f64::INFINITY, f64::min),
            max_reduction_pct: r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            stride_histogram: hist,
            all_feasible: clips.iter().all(|c| c.report.feasible),
            clips,
        })
    }
}

/// Runs the front end over named in-memory clips.
pub fn analyze_clips<'a, I>(clips: I, config: &PipelineConfig) -> Result<CorpusReport>
where
    I: IntoIterator<Item = (String, &'a AudioClip)>,
{
    let fe = FrontEnd::new(config.clone())?;
    let entries = clips
        .into_iter()
        .map(|(name, clip)| {
            Ok(ClipEntry {
                name,
                report: fe.extract(clip)?.report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CorpusReport::from_entries(entries)
}

/// `.wav` files directly inside `dir`, sorted by name.
pub fn list_wavs(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        let is_wav = p
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        if p.is_file() && is_wav {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

pub fn analyze_corpus(dir: impl AsRef<Path>, config: &PipelineConfig) -> Result<CorpusReport> {
    let paths = list_wavs(&dir)?;
    if paths.is_empty() {
        return Err(Error::invalid(format!(
            "no .wav files in {}",
            dir.as_ref().display()
        )));
    }
    let clips = paths
        .iter()
        .map(|p| {
            let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
            Ok((name, load_wav_expecting(p, config.sample_rate)?))
        })
        .collect::<Result<Vec<_>>>()?;
    analyze_clips(clips.iter().map(|(n, c)| (n.clone(), c)), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn burst(amp: f64) -> AudioClip {
        let x: Vec<f64> = (0..16_000)
            .map(|i| {
                if (4800..11_200).contains(&i) {
                    amp * (2.0 * PI * 1000.0 * i as f64 / 16_000.0).sin()
                } else {
                    0.0
                }
            })
            .collect();
        AudioClip::from_normalized(&x, 16_000)
    }

    #[test]
    fn silence_yields_no_rows() {
        let clip = AudioClip::new(vec![0; 16_000], 16_000);
        let (m, r) = extract(&clip, &PipelineConfig::default()).unwrap();
        assert!(m.is_empty());
        assert_eq!(r.frames_skipped, r.frames_total);
        assert_eq!(r.frames_total, 94);
        assert_eq!(r.processed_samples, 0);
        assert_eq!(r.reduction_pct, 100.0);
        assert_eq!(r.makespan_cycles, 0);
    }

    #[test]
    fn tone_burst_rows_stay_in_burst() {
        for fixed_point in [false, true] {
            let cfg = PipelineConfig {
                fixed_point,
                ..PipelineConfig::default()
            };
            let fe = FrontEnd::new(cfg).unwrap();
            let ex = fe.extract(&burst(0.5)).unwrap();
            assert!(!ex.features.is_empty());
            for row in &ex.features.rows {
                let start = row.frame_index as usize * 171;
                assert!(start + 256 > 4800 && start < 11_200, "frame {}", row.frame_index);
                assert_eq!(row.values.len(), 40);
            }
            let peak = &ex.features.rows[ex.features.n_rows() / 2].values;
            let k = (0..40).max_by(|&a, &b| peak[a].total_cmp(&peak[b])).unwrap();
            let centers: Vec<f64> = fe.bank().centers().collect();
            assert!((centers[k] - 1000.0).abs() < 150.0, "band {k} at {}", centers[k]);
        }
    }

    #[test]
    fn features_do_not_depend_on_filter_count() {
        let clip = burst(0.3);
        let a = extract(&clip, &PipelineConfig { filters: 1, ..Default::default() }).unwrap();
        let b = extract(&clip, &PipelineConfig { filters: 29, ..Default::default() }).unwrap();
        assert_eq!(a.0, b.0);
        assert!(a.1.makespan_cycles > b.1.makespan_cycles);
    }

    #[test]
    fn report_fields_are_consistent() {
        let (_, r) = extract(&burst(0.5), &PipelineConfig::default()).unwrap();
        assert_eq!(r.frames_total, r.frames_skipped + r.frames_stride1 + r.frames_stride2);
        assert_eq!(r.baseline_samples, 124 * 256);
        assert_eq!(
            r.processed_samples,
            r.frames_stride1 * 256 + r.frames_stride2 * 128
        );
        assert!((0.0..=100.0).contains(&r.reduction_pct));
        assert_eq!(r.prologue_cycles, 16_005);
        assert_eq!(r.feasible, r.latency_s <= 0.032);
        let json = serde_json::to_string(&r).unwrap();
        let back: RunReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn rejects_wrong_rate() {
        let clip = AudioClip::new(vec![1; 1000], 8000);
        assert!(matches!(
            extract(&clip, &PipelineConfig::default()),
            Err(Error::Format { field: "sample_rate", .. })
        ));
    }

    #[test]
    fn corpus_mean_is_exact_average() {
        let clips: Vec<AudioClip> = [0.1, 0.3, 0.9].iter().map(|&a| burst(a)).collect();
        let named = clips.iter().enumerate().map(|(i, c)| (format!("c{i}"), c));
        let rep = analyze_clips(named, &PipelineConfig::default()).unwrap();
        let mean = rep.clips.iter().map(|c| c.report.reduction_pct).sum::<f64>() / 3.0;
        assert_eq!(rep.mean_reduction_pct, mean);
        assert_eq!(rep.n_clips, 3);
        assert!(CorpusReport::from_entries(vec![]).is_err());
    }
}

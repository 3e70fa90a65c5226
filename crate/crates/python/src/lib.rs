use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use melgauge_core::arch::{self, ArchKind, MusicnnOptions};
use melgauge_core::dataset;
use melgauge_core::dsp::{self, AudioBuffer, PaddingMode};
use melgauge_core::mel::{self, Compression, MelConfig};
use melgauge_core::metrics;
use melgauge_core::reference::{self, Benchmark};
use melgauge_core::Error;

create_exception!(melgauge, MelgaugeError, PyValueError);

fn to_py(e: Error) -> PyErr {
    MelgaugeError::new_err(e.to_string())
}

/// One mel-spectrogram configuration.
#[pyclass(name = "MelConfig", module = "melgauge", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMelConfig {
    inner: MelConfig,
}

#[pymethods]
impl PyMelConfig {
    #[new]
    #[pyo3(signature = (sample_rate, n_mels, hop_multiplier = 1, compression = "dB", target_frames = None))]
    fn new(
        sample_rate: u32,
        n_mels: usize,
        hop_multiplier: u32,
        compression: &str,
        target_frames: Option<usize>,
    ) -> PyResult<Self> {
        let compression: Compression = compression.parse().map_err(to_py)?;
        let mut inner = MelConfig::new(sample_rate, n_mels, hop_multiplier, compression);
        inner.target_frames = target_frames;
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn sample_rate(&self) -> u32 {
        self.inner.sample_rate
    }

    #[getter]
    fn n_mels(&self) -> usize {
        self.inner.n_mels
    }

    #[getter]
    fn hop_multiplier(&self) -> u32 {
        self.inner.hop_multiplier
    }

    #[getter]
    fn compression(&self) -> String {
        self.inner.compression.to_string()
    }

    #[getter]
    fn hop(&self) -> usize {
        self.inner.hop()
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id()
    }

    fn is_grid_cell(&self) -> bool {
        self.inner.is_grid_cell()
    }

    fn __repr__(&self) -> String {
        format!("MelConfig({})", self.inner.id())
    }

    fn __eq__(&self, other: PyRef<'_, PyMelConfig>) -> bool {
        self.inner == other.inner
    }
}

#[pyfunction]
fn hz_to_mel(hz: f64) -> PyResult<f64> {
    mel::hz_to_mel_slaney(hz).map_err(to_py)
}

#[pyfunction]
fn mel_to_hz(mel: f64) -> f64 {
    mel::mel_to_hz(mel)
}

#[pyfunction]
fn hann_window(n: usize) -> PyResult<Vec<f64>> {
    dsp::hann_window(n).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n_samples, hop, center = true, frame_size = 512))]
fn frame_count(n_samples: usize, hop: usize, center: bool, frame_size: usize) -> PyResult<usize> {
    let padding = if center {
        PaddingMode::CenterReflect
    } else {
        PaddingMode::None
    };
    mel::frame_count(n_samples, hop, padding, frame_size).map_err(to_py)
}

#[pyfunction]
fn enumerate_grid() -> Vec<PyMelConfig> {
    mel::enumerate_grid()
        .into_iter()
        .map(|inner| PyMelConfig { inner })
        .collect()
}

/// Mel spectrogram as a list of rows (bands), each a list of frames.
#[pyfunction]
fn mel_spectrogram(
    samples: Vec<f64>,
    sample_rate: u32,
    config: PyRef<'_, PyMelConfig>,
) -> PyResult<Vec<Vec<f64>>> {
    let audio = AudioBuffer::new(samples, sample_rate).map_err(to_py)?;
    let spec = mel::mel_spectrogram(&audio, &config.inner).map_err(to_py)?;
    Ok(spec.values.rows().into_iter().map(|r| r.to_vec()).collect())
}

/// `(time_pools, freq_pools)` for the VGG network.
#[pyfunction]
fn pooling_plan(
    n_mels: usize,
    hop_multiplier: u32,
    sample_rate: u32,
) -> PyResult<(Vec<usize>, Vec<usize>)> {
    let plan = arch::vgg_pooling_plan(n_mels, hop_multiplier, sample_rate).map_err(to_py)?;
    Ok((plan.time_pools.to_vec(), plan.freq_pools.to_vec()))
}

fn parse_arch(name: &str) -> PyResult<ArchKind> {
    name.parse().map_err(to_py)
}

/// Stage shapes as `(label, freq, time, channels)` tuples.
#[pyfunction]
#[pyo3(signature = (config, arch = "vgg"))]
fn shape_trace(
    config: PyRef<'_, PyMelConfig>,
    arch: &str,
) -> PyResult<Vec<(String, usize, usize, usize)>> {
    let kind = parse_arch(arch)?;
    let (f, t, spec) =
        arch::input_dims(kind, &config.inner, &MusicnnOptions::default()).map_err(to_py)?;
    let trace = arch::propagate_shapes(&spec, f, t).map_err(to_py)?;
    Ok(trace
        .stages
        .into_iter()
        .map(|s| (s.label, s.freq, s.time, s.channels))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (config, arch = "vgg"))]
fn cost<'py>(
    py: Python<'py>,
    config: PyRef<'_, PyMelConfig>,
    arch: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let kind = parse_arch(arch)?;
    let (f, t, spec) =
        arch::input_dims(kind, &config.inner, &MusicnnOptions::default()).map_err(to_py)?;
    let report = arch::count_macs(&spec, f, t).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("input", (f, t))?;
    out.set_item("layer_names", report.layer_names)?;
    out.set_item("per_layer_macs", report.per_layer_macs)?;
    out.set_item("total_macs", report.total_macs)?;
    out.set_item("gmacs", report.gmacs)?;
    out.set_item("feature_bytes", report.feature_bytes)?;
    out.set_item("approximate", report.approximate)?;
    Ok(out)
}

#[pyfunction]
fn musicnn_timbre_heights(n_mels: usize) -> (usize, usize) {
    arch::musicnn_timbre_heights(n_mels)
}

#[pyfunction]
#[pyo3(signature = (n_mels, n_frames, bytes_per_value = 4))]
fn storage_size(n_mels: usize, n_frames: usize, bytes_per_value: usize) -> u64 {
    dataset::payload_size(n_mels, n_frames, bytes_per_value)
        + melgauge_core::mspec::HEADER_LEN as u64
}

#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    metrics::roc_auc(&scores, &labels).map_err(to_py)
}

#[pyfunction]
fn pr_auc(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    metrics::pr_auc(&scores, &labels).map_err(to_py)
}

/// Welch t-test; returns `(t, p, df)`.
#[pyfunction]
fn t_test(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let r = metrics::t_test_independent(&a, &b).map_err(to_py)?;
    Ok((r.t, r.p, r.df))
}

/// Published `(roc_auc, pr_auc)` in percent, or None.
#[pyfunction]
#[pyo3(signature = (config, arch = "vgg", benchmark = "mtat"))]
fn published_score(
    config: PyRef<'_, PyMelConfig>,
    arch: &str,
    benchmark: &str,
) -> PyResult<Option<(f64, f64)>> {
    let kind = parse_arch(arch)?;
    let bench: Benchmark = benchmark.parse().map_err(to_py)?;
    let c = &config.inner;
    Ok(reference::published_score(
        kind,
        bench,
        c.sample_rate,
        c.n_mels,
        c.hop_multiplier,
        c.compression,
    )
    .map(|s| (s.roc_auc, s.pr_auc)))
}

#[pymodule]
fn melgauge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MelgaugeError", m.py().get_type::<MelgaugeError>())?;
    m.add("PUBLISHED_LABEL", reference::PUBLISHED_LABEL)?;
    m.add_class::<PyMelConfig>()?;
    m.add_function(wrap_pyfunction!(hz_to_mel, m)?)?;
    m.add_function(wrap_pyfunction!(mel_to_hz, m)?)?;
    m.add_function(wrap_pyfunction!(hann_window, m)?)?;
    m.add_function(wrap_pyfunction!(frame_count, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_grid, m)?)?;
    m.add_function(wrap_pyfunction!(mel_spectrogram, m)?)?;
    m.add_function(wrap_pyfunction!(pooling_plan, m)?)?;
    m.add_function(wrap_pyfunction!(shape_trace, m)?)?;
    m.add_function(wrap_pyfunction!(cost, m)?)?;
    m.add_function(wrap_pyfunction!(musicnn_timbre_heights, m)?)?;
    m.add_function(wrap_pyfunction!(storage_size, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(pr_auc, m)?)?;
    m.add_function(wrap_pyfunction!(t_test, m)?)?;
    m.add_function(wrap_pyfunction!(published_score, m)?)?;
    Ok(())
}

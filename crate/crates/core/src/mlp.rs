//! Fully connected networks with sigmoid hidden layers and a linear output.
//!
//! Parameters live in one flat vector, packed layer by layer: the weight
//! matrix of layer `l` (shape `m_{l+1} x m_l`, row-major) followed by its bias
//! vector (length `m_{l+1}`).

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::objective::{CoordinateProbe, Objective, ParamVector};

#[inline]
pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Layer widths `m_0, m_1, ..., m_H`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct MlpSpec {
    widths: Vec<usize>,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::config("a network needs at least an input and an output width"));
        }
        if widths.contains(&0) {
            return Err(Error::config("layer widths must be positive"));
        }
        Ok(Self { widths })
    }

    /// Parses `"1-100-10-1"`.
    pub fn parse(text: &str) -> Result<Self> {
        let widths = text
            .split(['-', ','])
            .map(|w| {
                w.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::config(format!("bad layer width {w:?} in {text:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(widths)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// Number of weight layers `H`.
    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    /// `sum_l (m_l + 1) * m_{l+1}`.
    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    fn layouts(&self) -> Vec<LayerLayout> {
        let mut offset = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let layout = LayerLayout {
                    inputs: w[0],
                    outputs: w[1],
                    offset,
                };
                offset += (w[0] + 1) * w[1];
                layout
            })
            .collect()
    }
}

impl TryFrom<Vec<usize>> for MlpSpec {
    type Error = Error;

    fn try_from(widths: Vec<usize>) -> Result<Self> {
        Self::new(widths)
    }
}

impl From<MlpSpec> for Vec<usize> {
    fn from(spec: MlpSpec) -> Self {
        spec.widths
    }
}

impl std::fmt::Display for MlpSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.widths.iter().map(|w| w.to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}

#[derive(Debug, Clone, Copy)]
struct LayerLayout {
    inputs: usize,
    outputs: usize,
    offset: usize,
}

impl LayerLayout {
    fn weight_len(&self) -> usize {
        self.inputs * self.outputs
    }

    fn bias_offset(&self) -> usize {
        self.offset + self.weight_len()
    }

    fn end(&self) -> usize {
        self.bias_offset() + self.outputs
    }

    fn weights<'a>(&self, theta: &'a [f64]) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape(
            (self.outputs, self.inputs),
            &theta[self.offset..self.bias_offset()],
        )
        .unwrap()
    }

    fn biases<'a>(&self, theta: &'a [f64]) -> ArrayView1<'a, f64> {
        ArrayView1::from(&theta[self.bias_offset()..self.end()])
    }
}

/// Structured weights and biases of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// `outputs x inputs`, row-major.
    pub weights: Array2<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<LayerParams>,
}

impl MlpParams {
    pub fn zeros(spec: &MlpSpec) -> Self {
        Self {
            layers: spec
                .layouts()
                .iter()
                .map(|l| LayerParams {
                    weights: Array2::zeros((l.outputs, l.inputs)),
                    biases: vec![0.0; l.outputs],
                })
                .collect(),
        }
    }

    pub fn pack(&self, spec: &MlpSpec) -> Result<ParamVector> {
        let layouts = spec.layouts();
        if layouts.len() != self.layers.len() {
            return Err(Error::DimensionMismatch {
                expected: layouts.len(),
                got: self.layers.len(),
            });
        }
        let mut theta = Vec::with_capacity(spec.param_count());
        for (layout, layer) in layouts.iter().zip(&self.layers) {
            if layer.weights.dim() != (layout.outputs, layout.inputs) {
                return Err(Error::DimensionMismatch {
                    expected: layout.weight_len(),
                    got: layer.weights.len(),
                });
            }
            if layer.biases.len() != layout.outputs {
                return Err(Error::DimensionMismatch {
                    expected: layout.outputs,
                    got: layer.biases.len(),
                });
            }
            theta.extend(layer.weights.iter().copied());
            theta.extend_from_slice(&layer.biases);
        }
        Ok(theta)
    }

    pub fn unpack(spec: &MlpSpec, theta: &[f64]) -> Result<Self> {
        check_len(spec, theta)?;
        Ok(Self {
            layers: spec
                .layouts()
                .iter()
                .map(|l| LayerParams {
                    weights: l.weights(theta).to_owned(),
                    biases: l.biases(theta).to_vec(),
                })
                .collect(),
        })
    }
}

fn check_len(spec: &MlpSpec, theta: &[f64]) -> Result<()> {
    if theta.len() == spec.param_count() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: spec.param_count(),
            got: theta.len(),
        })
    }
}

/// Draws every weight and bias of layer `l` from `N(0, 2 / (m_l + m_{l+1}))`.
///
/// The stream is ChaCha8 seeded from `seed`; normal variates come from
/// `rand_distr::Normal` (ziggurat). Entries are drawn in packing order.
pub fn init_params(spec: &MlpSpec, seed: u64) -> ParamVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = Vec::with_capacity(spec.param_count());
    for layout in spec.layouts() {
        let variance = 2.0 / (layout.inputs + layout.outputs) as f64;
        let normal = Normal::new(0.0, variance.sqrt()).unwrap();
        let count = layout.end() - layout.offset;
        theta.extend((0..count).map(|_| normal.sample(&mut rng)));
    }
    theta
}

/// Evaluates the network at a single input point.
pub fn forward(spec: &MlpSpec, theta: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_len(spec, theta)?;
    if x.len() != spec.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.input_dim(),
            got: x.len(),
        });
    }
    let layouts = spec.layouts();
    let last = layouts.len() - 1;
    let mut activation = x.to_vec();
    for (l, layout) in layouts.iter().enumerate() {
        let w = layout.weights(theta);
        let b = layout.biases(theta);
        activation = w
            .outer_iter()
            .zip(b.iter())
            .map(|(row, bias)| {
                let z = row.iter().zip(&activation).map(|(a, b)| a * b).sum::<f64>() + bias;
                if l == last {
                    z
                } else {
                    sigmoid(z)
                }
            })
            .collect();
    }
    Ok(activation)
}

/// Aligned inputs and targets, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Array2<f64>,
    targets: Array2<f64>,
}

impl Dataset {
    pub fn new(inputs: Array2<f64>, targets: Array2<f64>) -> Result<Self> {
        if inputs.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if inputs.nrows() != targets.nrows() {
            return Err(Error::DimensionMismatch {
                expected: inputs.nrows(),
                got: targets.nrows(),
            });
        }
        Ok(Self {
            inputs: inputs.as_standard_layout().into_owned(),
            targets: targets.as_standard_layout().into_owned(),
        })
    }

    pub fn from_rows(inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows_to_array(inputs)?, rows_to_array(targets)?)
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.targets.ncols()
    }

    pub fn inputs(&self) -> &Array2<f64> {
        &self.inputs
    }

    pub fn targets(&self) -> &Array2<f64> {
        &self.targets
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            self.inputs.select(Axis(0), indices),
            self.targets.select(Axis(0), indices),
        )
    }
}

fn rows_to_array(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch {
            expected: cols,
            got: bad.len(),
        });
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Array2::from_shape_vec((rows.len(), cols), flat).unwrap())
}

/// Mean over samples and output components of the squared error.
pub fn mse_loss(spec: &MlpSpec, theta: &[f64], data: &Dataset) -> Result<f64> {
    let objective = MlpObjective::new(spec.clone(), data.clone())?;
    check_len(spec, theta)?;
    Ok(objective.loss(theta))
}

/// The mean-squared-error objective of a network over a fixed dataset.
#[derive(Debug, Clone)]
pub struct MlpObjective {
    spec: MlpSpec,
    layouts: Vec<LayerLayout>,
    data: Dataset,
}

/// Every layer's pre-activation and activation over the whole dataset.
struct ForwardCache {
    /// `pre[l]` is `n x m_{l+1}`.
    pre: Vec<Array2<f64>>,
    /// `post[l]` is the sigmoid of `pre[l]` for hidden layers; the output
    /// layer has no entry.
    post: Vec<Array2<f64>>,
    row_sse: Vec<f64>,
    loss: f64,
}

impl MlpObjective {
    pub fn new(spec: MlpSpec, data: Dataset) -> Result<Self> {
        if data.input_dim() != spec.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.input_dim(),
                got: data.input_dim(),
            });
        }
        if data.output_dim() != spec.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.output_dim(),
                got: data.output_dim(),
            });
        }
        let layouts = spec.layouts();
        Ok(Self {
            spec,
            layouts,
            data,
        })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Network outputs for every sample, `n x m_H`.
    pub fn outputs(&self, theta: &[f64]) -> Array2<f64> {
        self.outputs_for(theta, &self.data.inputs)
    }

    /// Network outputs for arbitrary inputs, one per row.
    pub fn outputs_for(&self, theta: &[f64], inputs: &Array2<f64>) -> Array2<f64> {
        let last = self.layouts.len() - 1;
        let mut current: Option<Array2<f64>> = None;
        for (l, layout) in self.layouts.iter().enumerate() {
            let input = current.as_ref().unwrap_or(inputs);
            let mut z = affine(input, layout, theta);
            if l != last {
                z.mapv_inplace(sigmoid);
            }
            current = Some(z);
        }
        current.unwrap()
    }

    fn forward_cache(&self, theta: &[f64]) -> ForwardCache {
        let last = self.layouts.len() - 1;
        let mut pre = Vec::with_capacity(self.layouts.len());
        let mut post: Vec<Array2<f64>> = Vec::with_capacity(last);
        for (l, layout) in self.layouts.iter().enumerate() {
            let input = if l == 0 { &self.data.inputs } else { &post[l - 1] };
            let z = affine(input, layout, theta);
            if l != last {
                post.push(z.mapv(sigmoid));
            }
            pre.push(z);
        }
        let out = pre[last].as_slice().unwrap();
        let targets = self.data.targets.as_slice().unwrap();
        let m = self.spec.output_dim();
        let row_sse: Vec<f64> = out
            .chunks_exact(m)
            .zip(targets.chunks_exact(m))
            .map(|(o, y)| squared_error(o, y))
            .collect();
        let loss = self.normalize(row_sse.iter().sum());
        ForwardCache {
            pre,
            post,
            row_sse,
            loss,
        }
    }

    fn normalize(&self, sse: f64) -> f64 {
        sse / (self.data.len() * self.spec.output_dim()) as f64
    }

    fn locate(&self, index: usize) -> (usize, usize, Option<usize>) {
        let l = self
            .layouts
            .iter()
            .position(|layout| index < layout.end())
            .expect("parameter index out of range");
        let layout = &self.layouts[l];
        let local = index - layout.offset;
        if local < layout.weight_len() {
            (l, local / layout.inputs, Some(local % layout.inputs))
        } else {
            (l, local - layout.weight_len(), None)
        }
    }
}

fn affine(input: &Array2<f64>, layout: &LayerLayout, theta: &[f64]) -> Array2<f64> {
    let mut z = input.dot(&layout.weights(theta).t());
    z += &layout.biases(theta);
    z.as_standard_layout().into_owned()
}

#[inline]
fn squared_error(out: &[f64], target: &[f64]) -> f64 {
    out.iter()
        .zip(target)
        .map(|(o, y)| (o - y) * (o - y))
        .sum()
}

impl Objective for MlpObjective {
    fn dim(&self) -> usize {
        self.spec.param_count()
    }

    fn loss(&self, theta: &[f64]) -> f64 {
        self.forward_cache(theta).loss
    }

    fn coordinate_probe<'a>(&'a self, theta: &'a [f64]) -> Box<dyn CoordinateProbe + 'a> {
        let max_width = self.spec.widths().iter().copied().max().unwrap();
        Box::new(MlpProbe {
            objective: self,
            theta,
            cache: self.forward_cache(theta),
            buf: vec![0.0; max_width],
            next: vec![0.0; max_width],
        })
    }
}

/// Evaluates single-parameter perturbations by propagating only what
/// changes: the perturbed unit, then the layers after it.
struct MlpProbe<'a> {
    objective: &'a MlpObjective,
    theta: &'a [f64],
    cache: ForwardCache,
    buf: Vec<f64>,
    next: Vec<f64>,
}

impl MlpProbe<'_> {
    fn layer_input(&self, l: usize) -> &[f64] {
        if l == 0 {
            self.objective.data.inputs.as_slice().unwrap()
        } else {
            self.cache.post[l - 1].as_slice().unwrap()
        }
    }
}

impl CoordinateProbe for MlpProbe<'_> {
    fn base(&self) -> f64 {
        self.cache.loss
    }

    fn loss_at(&mut self, index: usize, h: f64) -> f64 {
        let obj = self.objective;
        let (l, unit, column) = obj.locate(index);
        let layouts = &obj.layouts;
        let last = layouts.len() - 1;
        let n = obj.data.len();
        let m_out = obj.spec.output_dim();
        let fan_in = layouts[l].inputs;
        let width = layouts[l].outputs;
        let targets = obj.data.targets.as_slice().unwrap();

        let mut buf = std::mem::take(&mut self.buf);
        let mut next = std::mem::take(&mut self.next);
        let input = self.layer_input(l);
        let pre = self.cache.pre[l].as_slice().unwrap();
        let mut sse = 0.0;
        for s in 0..n {
            let dz = match column {
                Some(c) => h * input[s * fan_in + c],
                None => h,
            };
            if dz == 0.0 {
                sse += self.cache.row_sse[s];
                continue;
            }
            let z = pre[s * width + unit] + dz;
            let target = &targets[s * m_out..(s + 1) * m_out];
            if l == last {
                let out = &mut buf[..m_out];
                out.copy_from_slice(&pre[s * width..(s + 1) * width]);
                out[unit] = z;
                sse += squared_error(out, target);
                continue;
            }
            let post = self.cache.post[l].as_slice().unwrap();
            let da = sigmoid(z) - post[s * width + unit];
            if da == 0.0 {
                sse += self.cache.row_sse[s];
                continue;
            }
            // Rank-one update of the next layer's pre-activations.
            let nl = &layouts[l + 1];
            let next_pre = self.cache.pre[l + 1].as_slice().unwrap();
            let cur = &mut buf[..nl.outputs];
            cur.copy_from_slice(&next_pre[s * nl.outputs..(s + 1) * nl.outputs]);
            let w = &self.theta[nl.offset..nl.bias_offset()];
            for (o, value) in cur.iter_mut().enumerate() {
                *value += da * w[o * nl.inputs + unit];
            }
            // Dense propagation through whatever layers remain.
            let mut k = l + 1;
            while k < last {
                let layout = &layouts[k + 1];
                let w = &self.theta[layout.offset..layout.bias_offset()];
                let b = &self.theta[layout.bias_offset()..layout.end()];
                for a in buf[..layout.inputs].iter_mut() {
                    *a = sigmoid(*a);
                }
                for (o, value) in next[..layout.outputs].iter_mut().enumerate() {
                    let row = &w[o * layout.inputs..(o + 1) * layout.inputs];
                    *value = row
                        .iter()
                        .zip(&buf[..layout.inputs])
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        + b[o];
                }
                std::mem::swap(&mut buf, &mut next);
                k += 1;
            }
            sse += squared_error(&buf[..m_out], target);
        }
        self.buf = buf;
        self.next = next;
        obj.normalize(sse)
    }
}

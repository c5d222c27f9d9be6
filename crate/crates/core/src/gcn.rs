//! Graph-convolution layers `σ(A·H·W)` with a learnable, unconstrained
//! adjacency, stacked into the residual encoder/decoder used by every
//! sub-network.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::tensor::{Graph, Mat, NodeId, Parameters};

pub const RESIDUAL_BLOCKS: usize = 4;
pub const DEFAULT_HIDDEN: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Linear,
}

/// Forward-pass mode. Training carries the dropout rate and the stream the
/// masks are drawn from.
pub enum Mode<'r> {
    Eval,
    Train {
        dropout: f64,
        rng: &'r mut dyn RngCore,
    },
}

impl Mode<'_> {
    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcLayerParams {
    /// `K×K` adjacency.
    pub a: Mat,
    /// `F_in×F_out` feature transform.
    pub w: Mat,
    pub activation: Activation,
    /// Dropout is applied after the activation when training.
    pub droppable: bool,
}

impl GcLayerParams {
    pub fn zeros(
        nodes: usize,
        f_in: usize,
        f_out: usize,
        activation: Activation,
        droppable: bool,
    ) -> Self {
        GcLayerParams {
            a: Mat::zeros(nodes, nodes),
            w: Mat::zeros(f_in, f_out),
            activation,
            droppable,
        }
    }

    pub fn init(
        nodes: usize,
        f_in: usize,
        f_out: usize,
        activation: Activation,
        droppable: bool,
        rng: &mut impl Rng,
    ) -> Self {
        GcLayerParams {
            a: Mat::uniform(nodes, nodes, 1.0 / (nodes as f64).sqrt(), rng),
            w: Mat::uniform(f_in, f_out, 1.0 / (f_in as f64).sqrt(), rng),
            activation,
            droppable,
        }
    }

    /// Records `σ(A·h·W)` (plus dropout in training mode) on `g`.
    pub fn forward<'p>(
        &'p self,
        g: &mut Graph<'p>,
        h: NodeId,
        name: &str,
        mode: &mut Mode<'_>,
    ) -> Result<NodeId> {
        let (rows, cols) = g.value(h).shape();
        if rows != self.a.rows() || cols != self.w.rows() {
            return Err(Error::dim(
                "gc_layer",
                (rows, cols),
                (self.a.rows(), self.w.rows()),
            ));
        }
        let a = g.param(format!("{name}.A"), &self.a);
        let w = g.param(format!("{name}.W"), &self.w);
        let ah = g.matmul(a, h)?;
        let ahw = g.matmul(ah, w)?;
        let out = match self.activation {
            Activation::Tanh => g.tanh(ahw),
            Activation::Linear => ahw,
        };
        match mode {
            Mode::Train { dropout, rng } if self.droppable => {
                g.dropout(out, *dropout, Some(&mut **rng))
            }
            _ => Ok(out),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBlock {
    pub first: GcLayerParams,
    pub second: GcLayerParams,
}

impl ResidualBlock {
    /// `h + layer2(layer1(h))`.
    pub fn forward<'p>(
        &'p self,
        g: &mut Graph<'p>,
        h: NodeId,
        name: &str,
        mode: &mut Mode<'_>,
    ) -> Result<NodeId> {
        let y = self.first.forward(g, h, &format!("{name}.layer1"), mode)?;
        let y = self.second.forward(g, y, &format!("{name}.layer2"), mode)?;
        g.add(h, y)
    }
}

/// Shape of one encoder or decoder stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodecWidths {
    /// Graph nodes, i.e. pose parameters `K`.
    pub nodes: usize,
    pub width_in: usize,
    pub hidden: usize,
    pub width_out: usize,
    /// Activation of the final layer: tanh for encoders, linear for decoders.
    pub output: Activation,
}

impl CodecWidths {
    pub fn encoder(nodes: usize, width_in: usize, hidden: usize) -> Self {
        CodecWidths {
            nodes,
            width_in,
            hidden,
            width_out: hidden,
            output: Activation::Tanh,
        }
    }

    pub fn decoder(nodes: usize, hidden: usize, width_out: usize) -> Self {
        CodecWidths {
            nodes,
            width_in: hidden,
            hidden,
            width_out,
            output: Activation::Linear,
        }
    }

    /// Closed-form learnable-entry count.
    pub fn param_count(&self) -> usize {
        let a = self.nodes * self.nodes;
        let layers = 2 + 2 * RESIDUAL_BLOCKS;
        layers * a
            + self.width_in * self.hidden
            + 2 * RESIDUAL_BLOCKS * self.hidden * self.hidden
            + self.hidden * self.width_out
    }
}

/// Input layer, four residual blocks, output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct CodecParams {
    prefix: String,
    widths: CodecWidths,
    pub layer_in: GcLayerParams,
    pub blocks: Vec<ResidualBlock>,
    pub layer_out: GcLayerParams,
}

impl CodecParams {
    fn build(
        prefix: &str,
        widths: CodecWidths,
        mut make: impl FnMut(usize, usize, Activation, bool) -> GcLayerParams,
    ) -> Self {
        let h = widths.hidden;
        let layer_in = make(widths.width_in, h, Activation::Tanh, true);
        let blocks = (0..RESIDUAL_BLOCKS)
            .map(|_| ResidualBlock {
                first: make(h, h, Activation::Tanh, true),
                second: make(h, h, Activation::Tanh, true),
            })
            .collect();
        let layer_out = make(h, widths.width_out, widths.output, false);
        CodecParams {
            prefix: prefix.to_string(),
            widths,
            layer_in,
            blocks,
            layer_out,
        }
    }

    pub fn zeros(prefix: &str, widths: CodecWidths) -> Self {
        Self::build(prefix, widths, |i, o, act, drop| {
            GcLayerParams::zeros(widths.nodes, i, o, act, drop)
        })
    }

    /// `A ~ U(±1/√K)`, `W ~ U(±1/√F_in)`.
    pub fn init(prefix: &str, widths: CodecWidths, rng: &mut impl Rng) -> Self {
        Self::build(prefix, widths, |i, o, act, drop| {
            GcLayerParams::init(widths.nodes, i, o, act, drop, rng)
        })
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    /// Same weights registered under another name prefix.
    pub fn with_prefix(&self, prefix: &str) -> Self {
        CodecParams {
            prefix: prefix.to_string(),
            ..self.clone()
        }
    }

    pub fn widths(&self) -> CodecWidths {
        self.widths
    }

    /// Records the whole stack on `g`.
    pub fn forward<'p>(
        &'p self,
        g: &mut Graph<'p>,
        h: NodeId,
        mode: &mut Mode<'_>,
    ) -> Result<NodeId> {
        let p = &self.prefix;
        let mut x = self
            .layer_in
            .forward(g, h, &format!("{p}.layer_in"), mode)?;
        for (i, block) in self.blocks.iter().enumerate() {
            x = block.forward(g, x, &format!("{p}.block{}", i + 1), mode)?;
        }
        self.layer_out
            .forward(g, x, &format!("{p}.layer_out"), mode)
    }

    /// Eval-mode forward on a plain matrix.
    pub fn apply(&self, h: &Mat) -> Result<Mat> {
        let mut g = Graph::new();
        let x = g.constant_ref(h);
        let out = self.forward(&mut g, x, &mut Mode::Eval)?;
        Ok(g.value(out).clone())
    }

    fn layers(&self) -> impl Iterator<Item = (String, &GcLayerParams)> {
        let p = &self.prefix;
        std::iter::once((format!("{p}.layer_in"), &self.layer_in))
            .chain(self.blocks.iter().enumerate().flat_map(move |(i, b)| {
                [
                    (format!("{p}.block{}.layer1", i + 1), &b.first),
                    (format!("{p}.block{}.layer2", i + 1), &b.second),
                ]
            }))
            .chain(std::iter::once((format!("{p}.layer_out"), &self.layer_out)))
    }
}

impl Parameters for CodecParams {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Mat)) {
        for (name, layer) in self.layers() {
            f(&format!("{name}.A"), &layer.a);
            f(&format!("{name}.W"), &layer.w);
        }
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Mat)) {
        let p = self.prefix.clone();
        let mut visit = |name: String, layer: &mut GcLayerParams| {
            f(&format!("{name}.A"), &mut layer.a);
            f(&format!("{name}.W"), &mut layer.w);
        };
        visit(format!("{p}.layer_in"), &mut self.layer_in);
        for (i, b) in self.blocks.iter_mut().enumerate() {
            visit(format!("{p}.block{}.layer1", i + 1), &mut b.first);
            visit(format!("{p}.block{}.layer2", i + 1), &mut b.second);
        }
        visit(format!("{p}.layer_out"), &mut self.layer_out);
    }
}

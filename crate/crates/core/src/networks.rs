//! Interpolation (ITP) and final-prediction (FP) networks.
//!
//! Both take DCT coefficients of replication-padded sequences. Encoders end in
//! a `K×hidden` latent; the latents of the two encoders are summed and decoded
//! back to `K×C` coefficients, then the padded inputs are added back through a
//! weighted outer skip connection.

use rand::Rng;

use crate::dct::FreqMatrix;
use crate::error::{Error, Result};
use crate::gcn::{CodecParams, CodecWidths, Mode};
use crate::tensor::{Graph, Mat, NodeId, Parameters};

pub const ITP_OBS_WEIGHT: f64 = 0.7;
pub const ITP_PRIV_WEIGHT: f64 = 0.3;
pub const FP_SKIP_WEIGHT: f64 = 1.0;

/// `K×hidden` latent produced by the privileged encoder (E) or the simulator (S).
#[derive(Debug, Clone, PartialEq)]
pub struct PkRepresentation(pub Mat);

impl PkRepresentation {
    pub fn as_mat(&self) -> &Mat {
        &self.0
    }
}

/// Layer sizes shared by every sub-network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetShape {
    /// Pose parameters `K` (graph nodes).
    pub nodes: usize,
    /// DCT coefficients `C`.
    pub coeffs: usize,
    pub hidden: usize,
}

impl NetShape {
    fn encoder(&self) -> CodecWidths {
        CodecWidths::encoder(self.nodes, self.coeffs, self.hidden)
    }

    fn decoder(&self) -> CodecWidths {
        CodecWidths::decoder(self.nodes, self.hidden, self.coeffs)
    }

    fn check(&self, what: &'static str, m: &Mat) -> Result<()> {
        if m.shape() != (self.nodes, self.coeffs) {
            return Err(Error::dim(what, m.shape(), (self.nodes, self.coeffs)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItpParams {
    pub obs_enc: CodecParams,
    pub priv_enc: CodecParams,
    pub dec: CodecParams,
    pub obs_weight: f64,
    pub priv_weight: f64,
}

impl ItpParams {
    pub fn init(shape: NetShape, rng: &mut impl Rng) -> Self {
        ItpParams {
            obs_enc: CodecParams::init("itp.obs", shape.encoder(), rng),
            priv_enc: CodecParams::init("itp.priv", shape.encoder(), rng),
            dec: CodecParams::init("itp.dec", shape.decoder(), rng),
            obs_weight: ITP_OBS_WEIGHT,
            priv_weight: ITP_PRIV_WEIGHT,
        }
    }

    pub fn zeros(shape: NetShape) -> Self {
        ItpParams {
            obs_enc: CodecParams::zeros("itp.obs", shape.encoder()),
            priv_enc: CodecParams::zeros("itp.priv", shape.encoder()),
            dec: CodecParams::zeros("itp.dec", shape.decoder()),
            obs_weight: ITP_OBS_WEIGHT,
            priv_weight: ITP_PRIV_WEIGHT,
        }
    }

    pub fn shape(&self) -> NetShape {
        let w = self.obs_enc.widths();
        NetShape {
            nodes: w.nodes,
            coeffs: w.width_in,
            hidden: w.hidden,
        }
    }

    /// Records the network; returns `(H_itp, E)` nodes.
    pub fn forward<'p>(
        &'p self,
        g: &mut Graph<'p>,
        h_obs: NodeId,
        h_priv: NodeId,
        mode: &mut Mode<'_>,
    ) -> Result<(NodeId, NodeId)> {
        let shape = self.shape();
        shape.check("itp_forward(h_obs)", g.value(h_obs))?;
        shape.check("itp_forward(h_priv)", g.value(h_priv))?;
        let e = self.priv_enc.forward(g, h_priv, mode)?;
        let o = self.obs_enc.forward(g, h_obs, mode)?;
        let latent = g.add(o, e)?;
        let d = self.dec.forward(g, latent, mode)?;
        let skip = g.affine_combine(self.obs_weight, h_obs, self.priv_weight, h_priv)?;
        let out = g.add(d, skip)?;
        Ok((out, e))
    }

    pub fn predict(
        &self,
        h_obs: &FreqMatrix,
        h_priv: &FreqMatrix,
    ) -> Result<(FreqMatrix, PkRepresentation)> {
        let mut g = Graph::new();
        let o = g.constant_ref(h_obs.as_mat());
        let p = g.constant_ref(h_priv.as_mat());
        let (out, e) = self.forward(&mut g, o, p, &mut Mode::Eval)?;
        Ok((
            FreqMatrix(g.value(out).clone()),
            PkRepresentation(g.value(e).clone()),
        ))
    }

    /// Eval-mode privileged representation `E`, used as the distillation target.
    pub fn pk_representation(&self, h_priv: &FreqMatrix) -> Result<PkRepresentation> {
        self.shape().check("pk_representation", h_priv.as_mat())?;
        Ok(PkRepresentation(self.priv_enc.apply(h_priv.as_mat())?))
    }
}

impl Parameters for ItpParams {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Mat)) {
        self.obs_enc.visit_params(f);
        self.priv_enc.visit_params(f);
        self.dec.visit_params(f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Mat)) {
        self.obs_enc.visit_params_mut(f);
        self.priv_enc.visit_params_mut(f);
        self.dec.visit_params_mut(f);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpParams {
    pub obs_enc: CodecParams,
    pub pk_sim: CodecParams,
    pub dec: CodecParams,
    pub skip_weight: f64,
}

impl FpParams {
    pub fn init(shape: NetShape, rng: &mut impl Rng) -> Self {
        FpParams {
            obs_enc: CodecParams::init("fp.obs", shape.encoder(), rng),
            pk_sim: CodecParams::init("fp.sim", shape.encoder(), rng),
            dec: CodecParams::init("fp.dec", shape.decoder(), rng),
            skip_weight: FP_SKIP_WEIGHT,
        }
    }

    pub fn zeros(shape: NetShape) -> Self {
        FpParams {
            obs_enc: CodecParams::zeros("fp.obs", shape.encoder()),
            pk_sim: CodecParams::zeros("fp.sim", shape.encoder()),
            dec: CodecParams::zeros("fp.dec", shape.decoder()),
            skip_weight: FP_SKIP_WEIGHT,
        }
    }

    pub fn shape(&self) -> NetShape {
        let w = self.obs_enc.widths();
        NetShape {
            nodes: w.nodes,
            coeffs: w.width_in,
            hidden: w.hidden,
        }
    }

    /// Records the network; returns `(H_fp, S)` nodes.
    pub fn forward<'p>(
        &'p self,
        g: &mut Graph<'p>,
        h_obs: NodeId,
        mode: &mut Mode<'_>,
    ) -> Result<(NodeId, NodeId)> {
        self.shape().check("fp_forward", g.value(h_obs))?;
        let s = self.pk_sim.forward(g, h_obs, mode)?;
        let o = self.obs_enc.forward(g, h_obs, mode)?;
        let latent = g.add(o, s)?;
        let d = self.dec.forward(g, latent, mode)?;
        let out = g.affine_combine(1.0, d, self.skip_weight, h_obs)?;
        Ok((out, s))
    }

    pub fn predict(&self, h_obs: &FreqMatrix) -> Result<(FreqMatrix, PkRepresentation)> {
        let mut g = Graph::new();
        let o = g.constant_ref(h_obs.as_mat());
        let (out, s) = self.forward(&mut g, o, &mut Mode::Eval)?;
        Ok((
            FreqMatrix(g.value(out).clone()),
            PkRepresentation(g.value(s).clone()),
        ))
    }
}

impl Parameters for FpParams {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Mat)) {
        self.obs_enc.visit_params(f);
        self.pk_sim.visit_params(f);
        self.dec.visit_params(f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Mat)) {
        self.obs_enc.visit_params_mut(f);
        self.pk_sim.visit_params_mut(f);
        self.dec.visit_params_mut(f);
    }
}

/// Single encoder/decoder network without any privileged pathway, used by the
/// privileged-sequence-loss ablation.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectParams {
    pub obs_enc: CodecParams,
    pub dec: CodecParams,
}

impl DirectParams {
    pub fn init(shape: NetShape, rng: &mut impl Rng) -> Self {
        DirectParams {
            obs_enc: CodecParams::init("psl.obs", shape.encoder(), rng),
            dec: CodecParams::init("psl.dec", shape.decoder(), rng),
        }
    }

    pub fn shape(&self) -> NetShape {
        let w = self.obs_enc.widths();
        NetShape {
            nodes: w.nodes,
            coeffs: w.width_in,
            hidden: w.hidden,
        }
    }

    pub fn forward<'p>(
        &'p self,
        g: &mut Graph<'p>,
        h_obs: NodeId,
        mode: &mut Mode<'_>,
    ) -> Result<NodeId> {
        self.shape().check("direct_forward", g.value(h_obs))?;
        let o = self.obs_enc.forward(g, h_obs, mode)?;
        let d = self.dec.forward(g, o, mode)?;
        g.add(d, h_obs)
    }

    pub fn predict(&self, h_obs: &FreqMatrix) -> Result<FreqMatrix> {
        let mut g = Graph::new();
        let o = g.constant_ref(h_obs.as_mat());
        let out = self.forward(&mut g, o, &mut Mode::Eval)?;
        Ok(FreqMatrix(g.value(out).clone()))
    }
}

impl Parameters for DirectParams {
    fn visit_params(&self, f: &mut dyn FnMut(&str, &Mat)) {
        self.obs_enc.visit_params(f);
        self.dec.visit_params(f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Mat)) {
        self.obs_enc.visit_params_mut(f);
        self.dec.visit_params_mut(f);
    }
}

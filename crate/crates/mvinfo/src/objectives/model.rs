//! Two-branch model (encoder per view plus optional heads) and the
//! combined training objective assembled on a tape.

use crate::autodiff::mlp::{Activation, MlpParams};
use crate::autodiff::tape::{Tape, Var};
use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};
use crate::objectives::config::{BaseLoss, ObjectiveConfig, Regularizer};
use crate::objectives::losses::{
    barlow_twins, byol_loss, lbe_loss, mibip_loss, nt_xent, rc_loss, reparameterize,
};

/// Encoders plus whichever heads the configured objective needs. The EMA
/// targets are not trainable; everything else is.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub enc1: MlpParams,
    pub enc2: MlpParams,
    pub decoder1: Option<MlpParams>,
    pub decoder2: Option<MlpParams>,
    pub predictor: Option<MlpParams>,
    pub cls_head: Option<MlpParams>,
    pub target1: Option<MlpParams>,
    pub target2: Option<MlpParams>,
}

impl Model {
    /// Instantiate encoders and exactly the heads the config calls for.
    /// Decoders mirror the encoder sizes reversed; the predictor is a
    /// same-width two-layer head; targets start as encoder copies.
    pub fn build(
        cfg: &ObjectiveConfig,
        encoder_sizes: &[usize],
        n_classes: usize,
        seed: u64,
    ) -> Result<Model> {
        cfg.validate()?;
        let act = Activation::Tanh;
        let enc1 = MlpParams::init(encoder_sizes, act, seed)?;
        let enc2 = MlpParams::init(encoder_sizes, act, seed.wrapping_add(1))?;
        let d = enc1.output_dim();

        let mut m = Model {
            enc1,
            enc2,
            decoder1: None,
            decoder2: None,
            predictor: None,
            cls_head: None,
            target1: None,
            target2: None,
        };
        if cfg.reg == Regularizer::Rc {
            let mut rev: Vec<usize> = encoder_sizes.to_vec();
            rev.reverse();
            m.decoder1 = Some(MlpParams::init(&rev, act, seed.wrapping_add(2))?);
            m.decoder2 = Some(MlpParams::init(&rev, act, seed.wrapping_add(3))?);
        }
        if cfg.base == BaseLoss::Byol {
            m.predictor = Some(MlpParams::init(&[d, d, d], act, seed.wrapping_add(4))?);
            m.target1 = Some(m.enc1.clone());
            m.target2 = Some(m.enc2.clone());
        }
        if cfg.base == BaseLoss::Supervised {
            if n_classes < 2 {
                return Err(Error::Config(format!(
                    "supervised base needs >= 2 classes, got {n_classes}"
                )));
            }
            m.cls_head = Some(MlpParams::init(&[d, n_classes], act, seed.wrapping_add(5))?);
        }
        Ok(m)
    }

    /// Trainable tensors in a stable order (enc1, enc2, then heads); the
    /// EMA targets are excluded.
    pub fn trainable_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = self.enc1.tensors_mut();
        out.extend(self.enc2.tensors_mut());
        for head in [
            &mut self.decoder1,
            &mut self.decoder2,
            &mut self.predictor,
            &mut self.cls_head,
        ]
        .into_iter()
        .flatten()
        {
            out.extend(head.tensors_mut());
        }
        out
    }
}

/// A loss node plus the trainable leaves it was built over, in the same
/// order as `Model::trainable_mut`.
#[derive(Debug)]
pub struct LossGraph {
    pub loss: Var,
    pub trainable: Vec<Var>,
}

fn require<'a>(head: &'a Option<MlpParams>, name: &str) -> Result<&'a MlpParams> {
    head.as_ref()
        .ok_or_else(|| Error::Config(format!("objective needs the '{name}' head, none built")))
}

/// Assemble the full objective for one batch: base loss plus the
/// sign-adjusted regularizer so minimizing the total maximizes
/// I(z1,z2) + lambda_i * I(z_i, v_i). `noise_seed` drives the
/// reparameterization draw (LBE only).
pub fn combined_loss(
    tape: &Tape,
    cfg: &ObjectiveConfig,
    model: &Model,
    v1: &Tensor,
    v2: &Tensor,
    t_shared: &[usize],
    noise_seed: u64,
) -> Result<LossGraph> {
    cfg.validate()?;
    let e1 = model.enc1.leaves(tape);
    let e2 = model.enc2.leaves(tape);
    let mut trainable = MlpParams::var_order(&e1);
    trainable.extend(MlpParams::var_order(&e2));

    let x1 = tape.leaf(v1.clone());
    let x2 = tape.leaf(v2.clone());
    let z1 = model.enc1.forward_on(tape, &e1, x1)?;
    let z2 = model.enc2.forward_on(tape, &e2, x2)?;

    // heads are registered in the trainable_mut order regardless of which
    // loss terms end up using them
    let d1_vars = model.decoder1.as_ref().map(|d| {
        let v = d.leaves(tape);
        trainable.extend(MlpParams::var_order(&v));
        v
    });
    let d2_vars = model.decoder2.as_ref().map(|d| {
        let v = d.leaves(tape);
        trainable.extend(MlpParams::var_order(&v));
        v
    });
    let pred_vars = model.predictor.as_ref().map(|p| {
        let v = p.leaves(tape);
        trainable.extend(MlpParams::var_order(&v));
        v
    });
    let cls_vars = model.cls_head.as_ref().map(|c| {
        let v = c.leaves(tape);
        trainable.extend(MlpParams::var_order(&v));
        v
    });

    let base = match cfg.base {
        BaseLoss::Simclr => nt_xent(tape, z1, z2, cfg.tau)?,
        BaseLoss::Barlowtwins => barlow_twins(tape, z1, z2, cfg.bt_off_diag)?,
        BaseLoss::Byol => {
            let predictor = require(&model.predictor, "predictor")?;
            let t1 = require(&model.target1, "target1")?;
            let t2 = require(&model.target2, "target2")?;
            let pv = pred_vars.as_ref().unwrap();
            let p1 = predictor.forward_on(tape, pv, z1)?;
            let p2 = predictor.forward_on(tape, pv, z2)?;
            let l1 = byol_loss(tape, p1, &t2.forward(v2)?)?;
            let l2 = byol_loss(tape, p2, &t1.forward(v1)?)?;
            tape.scale(tape.add(l1, l2)?, 0.5)
        }
        BaseLoss::Supervised => {
            let cls = require(&model.cls_head, "cls_head")?;
            let cv = cls_vars.as_ref().unwrap();
            if t_shared.len() != v1.dims2()?.0 {
                return Err(Error::Shape(format!(
                    "supervised base: {} labels for {} samples",
                    t_shared.len(),
                    v1.dims2()?.0
                )));
            }
            let l1 = tape.softmax_log_loss(cls.forward_on(tape, cv, z1)?, t_shared)?;
            let l2 = tape.softmax_log_loss(cls.forward_on(tape, cv, z2)?, t_shared)?;
            tape.scale(tape.add(l1, l2)?, 0.5)
        }
    };

    let loss = match cfg.reg {
        Regularizer::None => base,
        Regularizer::Rc => {
            let dec1 = require(&model.decoder1, "decoder1")?;
            let dec2 = require(&model.decoder2, "decoder2")?;
            let r1 = rc_loss(tape, v1, z1, dec1, d1_vars.as_ref().unwrap())?;
            let r2 = rc_loss(tape, v2, z2, dec2, d2_vars.as_ref().unwrap())?;
            let reg = tape.add(tape.scale(r1, cfg.lambda1), tape.scale(r2, cfg.lambda2))?;
            tape.add(base, reg)?
        }
        Regularizer::Lbe => {
            // the LBE value is maximized, hence subtracted
            let s1 = reparameterize(tape, z1, cfg.sigma, noise_seed)?;
            let s2 = reparameterize(tape, z2, cfg.sigma, noise_seed.wrapping_add(1))?;
            let r1 = lbe_loss(tape, s1, z1, cfg.rho)?;
            let r2 = lbe_loss(tape, s2, z2, cfg.rho)?;
            let reg = tape.add(tape.scale(r1, cfg.lambda1), tape.scale(r2, cfg.lambda2))?;
            tape.sub(base, reg)?
        }
        Regularizer::Mibip => {
            // cross-view term, split evenly between the two view weights
            let m = mibip_loss(tape, z1, z2)?;
            tape.add(base, tape.scale(m, 0.5 * (cfg.lambda1 + cfg.lambda2)))?
        }
    };
    Ok(LossGraph { loss, trainable })
}

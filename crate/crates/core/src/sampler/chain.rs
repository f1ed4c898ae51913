use rand::Rng;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::potential::Potential;
use crate::rng::{stream, StreamRng};

use super::conditional::{site_conditional, Draw, MixedLaw};

/// Pin flags and heights of one Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pinned: Vec<bool>,
    heights: Vec<f64>,
    sweeps: u64,
}

impl ChainState {
    /// All sites unpinned at height zero.
    pub fn new(sites: usize) -> Self {
        Self {
            pinned: vec![false; sites],
            heights: vec![0.0; sites],
            sweeps: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    pub fn pinned(&self) -> &[bool] {
        &self.pinned
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn height(&self, i: usize) -> f64 {
        self.heights[i]
    }

    pub fn is_pinned(&self, i: usize) -> bool {
        self.pinned[i]
    }

    pub fn pinned_count(&self) -> usize {
        self.pinned.iter().filter(|&&p| p).count()
    }

    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    pub fn apply(&mut self, i: usize, draw: Draw) {
        match draw {
            Draw::Pinned => {
                self.pinned[i] = true;
                self.heights[i] = 0.0;
            }
            Draw::Height(x) => {
                self.pinned[i] = false;
                self.heights[i] = x;
            }
        }
    }
}

/// One systematic scan over the sites in canonical order.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &mut ChainState,
    params: &ModelParams,
    rng: &mut R,
) -> Result<()> {
    let n = params.volume.len();
    if state.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: state.len(),
        });
    }
    if let Potential::Gaussian { curvature } = params.potential {
        let d = params.volume.dimension();
        let ln_eps = params.epsilon.ln();
        let eta = params.eta.values();
        for i in 0..n {
            let (mut s, mut s2) = (0.0, 0.0);
            for &j in params.volume.neighbors(i) {
                let h = state.heights[j];
                s += h;
                s2 += h * h;
            }
            let law = MixedLaw::gaussian(curvature, d, eta[i], s, s2, ln_eps);
            state.apply(i, law.sample(rng)?);
        }
    } else {
        for i in 0..n {
            let law = site_conditional(state, i, params)?;
            state.apply(i, law.sample(rng)?);
        }
    }
    state.sweeps += 1;
    Ok(())
}

/// A chain bound to its parameters and its own random stream.
#[derive(Debug, Clone)]
pub struct Chain {
    params: ModelParams,
    state: ChainState,
    rng: StreamRng,
}

impl Chain {
    pub fn new(params: ModelParams, seed: u64) -> Self {
        let n = params.volume.len();
        Self {
            params,
            state: ChainState::new(n),
            rng: stream(seed, 0),
        }
    }

    pub fn sweep(&mut self) -> Result<()> {
        gibbs_sweep(&mut self.state, &self.params, &mut self.rng)
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
}

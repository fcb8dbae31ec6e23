use crate::alloc::FrameOutcome;

/// Per-user running means and cumulative rates carried between frames.
///
/// `running_mean_bps` never drops below ψ, so every PFI denominator stays
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocatorState {
    running_mean_bps: Vec<f64>,
    window_cumulative_bps: Vec<f64>,
    frames_in_window: usize,
    total_cumulative_bps: Vec<f64>,
    psi: f64,
}

impl AllocatorState {
    /// Every running mean starts at ψ.
    pub fn new(num_users: usize, psi: f64) -> Self {
        assert!(psi > 0.0, "psi must be positive");
        AllocatorState {
            running_mean_bps: vec![psi; num_users],
            window_cumulative_bps: vec![0.0; num_users],
            frames_in_window: 0,
            total_cumulative_bps: vec![0.0; num_users],
            psi,
        }
    }

    /// Starts from explicit running means, floored at ψ.
    pub fn with_running_means(running_mean_bps: Vec<f64>, psi: f64) -> Self {
        let mut state = AllocatorState::new(running_mean_bps.len(), psi);
        for (dst, src) in state.running_mean_bps.iter_mut().zip(running_mean_bps) {
            *dst = src.max(psi);
        }
        state
    }

    pub fn num_users(&self) -> usize {
        self.running_mean_bps.len()
    }

    pub fn running_mean_bps(&self) -> &[f64] {
        &self.running_mean_bps
    }

    pub fn window_cumulative_bps(&self) -> &[f64] {
        &self.window_cumulative_bps
    }

    pub fn frames_in_window(&self) -> usize {
        self.frames_in_window
    }

    pub fn total_cumulative_bps(&self) -> &[f64] {
        &self.total_cumulative_bps
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// Scales every running mean by `factor`, keeping the ψ floor.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        for m in &mut s.running_mean_bps {
            *m = (*m * factor).max(self.psi);
        }
        s
    }

    /// EWMA update `ω̄ ← (1 − 1/Δτ)·ω̄ + (1/Δτ)·ω`, then the ψ floor.
    pub fn update_pf_mean(&mut self, last_frame_rates: &[f64], pf_window: usize) {
        assert!(pf_window >= 1, "pf_window must be at least 1");
        assert_eq!(last_frame_rates.len(), self.num_users());
        let w = 1.0 / pf_window as f64;
        for (k, &rate) in last_frame_rates.iter().enumerate() {
            let m = &mut self.running_mean_bps[k];
            *m = ((1.0 - w) * *m + w * rate).max(self.psi);
            self.total_cumulative_bps[k] += rate;
        }
    }

    /// Adds one frame to the current allocation window and sets each running
    /// mean to the window mean so far, floored at ψ.
    ///
    /// When the window reaches `window_frames` frames it is closed: the
    /// unfloored window means are returned, the accumulators reset and the
    /// running means carry the floored final means into the next window.
    pub fn update_ltpf_mean(
        &mut self,
        frame_rates: &[f64],
        window_frames: usize,
    ) -> Option<Vec<f64>> {
        assert!(window_frames >= 1);
        assert!(self.frames_in_window < window_frames, "window already full");
        assert_eq!(frame_rates.len(), self.num_users());
        self.frames_in_window += 1;
        let frames = self.frames_in_window as f64;
        for (k, &rate) in frame_rates.iter().enumerate() {
            self.window_cumulative_bps[k] += rate;
            self.total_cumulative_bps[k] += rate;
            self.running_mean_bps[k] = (self.window_cumulative_bps[k] / frames).max(self.psi);
        }
        if self.frames_in_window < window_frames {
            return None;
        }
        let means = self
            .window_cumulative_bps
            .iter()
            .map(|c| c / frames)
            .collect();
        self.window_cumulative_bps.iter_mut().for_each(|c| *c = 0.0);
        self.frames_in_window = 0;
        Some(means)
    }

    /// Convenience for applying an outcome's rates with
    /// [`update_ltpf_mean`](Self::update_ltpf_mean).
    pub fn apply_ltpf(&mut self, outcome: &FrameOutcome, window_frames: usize) -> Option<Vec<f64>> {
        self.update_ltpf_mean(&outcome.per_user_rate_bps, window_frames)
    }
}

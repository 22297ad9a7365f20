use tnm_core::dataset::{prepare, WindowPair, DEFAULT_FRACTIONS};
use tnm_core::dynamics::{generate_trajectory, rk4_step_with, FlowSpec, State3};
use tnm_core::model::{Gradients, ParamMode, TnmModel};
use tnm_core::tensor::FeatureVector;
use tnm_core::training::{
    adam_step, batch_gradient, fit, mse_gradient, AdamState, BatchMode, TrainConfig,
};

fn small_lorenz(n: usize) -> tnm_core::dataset::SplitDataset {
    let traj = generate_trajectory(&FlowSpec {
        n_samples: n,
        ..FlowSpec::lorenz()
    })
    .unwrap();
    prepare(&traj, DEFAULT_FRACTIONS).unwrap()
}

fn exp_endpoint_error(steps: usize) -> f64 {
    let h = 1.0 / steps as f64;
    let mut s = State3::new(1.0, 0.0, 0.0);
    for _ in 0..steps {
        s = rk4_step_with(|v| State3::new(v.x, 0.0, 0.0), s, h);
    }
    (s.x - 1f64.exp()).abs()
}

#[test]
fn rk4_global_order() {
    for steps in [10, 20, 40] {
        let ratio = exp_endpoint_error(steps) / exp_endpoint_error(2 * steps);
        assert!(
            (14.0..=18.0).contains(&ratio),
            "steps {steps}: ratio {ratio}"
        );
    }
}

#[test]
fn trajectories_are_deterministic() {
    let flow = FlowSpec {
        n_samples: 200,
        ..FlowSpec::lorenz()
    };
    let a = generate_trajectory(&flow).unwrap();
    let b = generate_trajectory(&flow).unwrap();
    assert!(a
        .states
        .iter()
        .zip(&b.states)
        .all(|(p, q)| p.to_array().map(f64::to_bits) == q.to_array().map(f64::to_bits)));
}

#[test]
fn lorenz_stays_on_attractor() {
    let traj = generate_trajectory(&FlowSpec::lorenz()).unwrap();
    assert_eq!(traj.len(), 3000);
    assert!((traj.dt_sample - 0.1).abs() < 1e-15);
    for s in &traj.states {
        assert!(
            s.x.abs() <= 25.0 && s.y.abs() <= 30.0 && (0.0..=55.0).contains(&s.z),
            "{s:?}"
        );
    }
}

#[test]
fn rossler_is_finite_with_positive_z() {
    let traj = generate_trajectory(&FlowSpec::rossler()).unwrap();
    assert_eq!(traj.len(), 3000);
    assert!(traj.states.iter().all(|s| s.is_finite() && s.z >= 0.0));
}

#[test]
fn split_counts_for_3000_samples() {
    let data = small_lorenz(3000);
    assert_eq!(data.counts(), (1197, 1496, 300));
}

#[test]
fn zero_epochs_leave_model_unchanged() {
    let data = small_lorenz(120);
    let model = TnmModel::build(3, 3, ParamMode::Inhomogeneous, 4).unwrap();
    let cfg = TrainConfig {
        epochs: 0,
        ..Default::default()
    };
    let report = fit(model.clone(), &data, &cfg).unwrap();
    assert!(report.train_loss.is_empty() && report.val_loss.is_empty());
    assert_eq!(report.model, model);
}

#[test]
fn fit_is_deterministic() {
    let data = small_lorenz(300);
    for batch in [BatchMode::FullBatch, BatchMode::MiniBatch(8)] {
        let cfg = TrainConfig {
            epochs: 4,
            seed: 3,
            batch,
            ..Default::default()
        };
        let run = || {
            fit(
                TnmModel::build(3, 4, ParamMode::Homogeneous, 1).unwrap(),
                &data,
                &cfg,
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.model, b.model);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.train_loss), bits(&b.train_loss));
        assert_eq!(bits(&a.val_loss), bits(&b.val_loss));
    }
}

/// Homogeneous training equals training an untied copy whose per-node
/// gradients are summed per layer and handed back to every node.
#[test]
fn tied_training_matches_summed_untied_training() {
    let data = small_lorenz(80);
    let cfg = TrainConfig::default();
    let mut tied = TnmModel::build(3, 3, ParamMode::Homogeneous, 12).unwrap();
    let mut untied = tied.untied();
    let mut tied_state = AdamState::new(&tied);
    let mut untied_state = AdamState::new(&untied);

    for step in 0..3 {
        let batch: Vec<&WindowPair> = data.train.iter().skip(step * 8).take(8).collect();
        let g = batch_gradient(&tied, &batch).unwrap();
        adam_step(&mut tied, &g, &mut tied_state, &cfg).unwrap();

        let mut summed = Gradients::zeros_like(&tied);
        for pair in &batch {
            let window: Vec<FeatureVector> = pair
                .window
                .iter()
                .map(|s| FeatureVector::new(s.to_array().to_vec()).unwrap())
                .collect();
            let (pred, cache) = untied.forward(&window).unwrap();
            let up = mse_gradient(pred.as_slice(), &pair.target.to_array(), batch.len());
            let per_node = untied.backward(&cache, &up).unwrap();
            for (acc, nodes) in summed.layers.iter_mut().zip(&per_node.layers) {
                for node in nodes {
                    for (a, v) in acc[0].values_mut().iter_mut().zip(node.values()) {
                        *a += v;
                    }
                }
            }
        }
        let redistributed = Gradients {
            layers: summed
                .layers
                .iter()
                .zip(untied.layers())
                .map(|(g, nodes)| vec![g[0].clone(); nodes.len()])
                .collect(),
        };
        adam_step(&mut untied, &redistributed, &mut untied_state, &cfg).unwrap();

        assert_eq!(tied.untied(), untied, "step {step}");
    }
}

#[test]
fn untied_model_predicts_identically_on_real_windows() {
    let data = small_lorenz(100);
    let hom = TnmModel::build(3, 5, ParamMode::Homogeneous, 2).unwrap();
    let inh = hom.untied();
    for pair in &data.val {
        let w = pair.window.map(|s| s.to_array());
        let a = hom.predict(&w).unwrap();
        let b = inh.predict(&w).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}

#[test]
fn output_layer_is_linear_in_its_weights() {
    let model = TnmModel::build(3, 3, ParamMode::Inhomogeneous, 6).unwrap();
    let window: Vec<[f64; 3]> = (0..7).map(|k| [0.2 * k as f64, -0.5, 0.1]).collect();
    let base = model.predict(&window).unwrap();
    let mut scaled = model.clone();
    scaled
        .tensors_mut()
        .last()
        .unwrap()
        .values_mut()
        .iter_mut()
        .for_each(|v| *v *= 2.5);
    let out = scaled.predict(&window).unwrap();
    for (a, b) in out.iter().zip(&base) {
        assert!((a - 2.5 * b).abs() < 1e-14);
    }
}

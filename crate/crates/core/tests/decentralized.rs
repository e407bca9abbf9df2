use commitment_lab::dcl::{Mode, Trainer, TrainerConfig};
use commitment_lab::envs::prisoners_dilemma;
use commitment_lab::harness::EnvConfig;
use commitment_lab::models::CriticTable;

fn trained(mode: Mode) -> Trainer {
    let spec = prisoners_dilemma();
    let cfg = TrainerConfig { mode, iterations: 25, ..EnvConfig::Pd.default_trainer() };
    let mut t = Trainer::new(&spec, &cfg, 4).unwrap();
    for _ in 0..25 {
        t.step().unwrap();
    }
    t
}

/// Agent 1's true tables and critic replaced by arbitrary values.
fn tamper(t: &Trainer) -> Trainer {
    let spec = prisoners_dilemma();
    let mut out = t.clone();
    let other = &mut out.policies.agents[1];
    for (k, v) in other.proposal.logits.data_mut().iter_mut().enumerate() {
        *v = 3.0 - k as f64;
    }
    for (k, v) in other.commitment.logits.data_mut().iter_mut().enumerate() {
        *v = if k % 2 == 0 { 2.5 } else { -1.5 };
    }
    other.action.logits.fill(-0.75);
    out.critics[1] = CriticTable::from_values(&spec, vec![7.0, -5.0, 3.0, 11.0], Default::default()).unwrap();
    out
}

#[test]
fn decentralized_learner_never_reads_the_other_agent() {
    let t = trained(Mode::Decentralized);
    let batch = t.sample_batch().unwrap();
    let before = t.own_gradients(0, &batch);
    let after = tamper(&t).own_gradients(0, &batch);
    assert_eq!(before.proposal, after.proposal);
    assert_eq!(before.commitment, after.commitment);
    assert_eq!(before.action, after.action);
    assert_eq!(before.ic, after.ic);
}

#[test]
fn centralized_learner_does_read_the_other_agent() {
    let t = trained(Mode::Centralized);
    let batch = t.sample_batch().unwrap();
    let before = t.own_gradients(0, &batch);
    let after = tamper(&t).own_gradients(0, &batch);
    assert!(before.proposal != after.proposal || before.ic != after.ic || before.commitment != after.commitment);
}

#[test]
fn decentralized_trainer_keeps_one_model_per_other_agent() {
    let t = trained(Mode::Decentralized);
    let models = t.opponent_models.as_ref().unwrap();
    for (i, row) in models.iter().enumerate() {
        for (j, m) in row.iter().enumerate() {
            assert_eq!(m.is_some(), i != j);
        }
    }
    assert!(trained(Mode::Centralized).opponent_models.is_none());
}

use stylecloze::corpus::{
    build_experiment_dataset, cloze_parts, Choice, ClozeInstance, Experiment, PairedChoice,
};
use stylecloze::features::FeatureConfig;
use stylecloze::harness::{
    ablation, cloze_decide, cloze_eval, combined_train_eval, lm_cloze_decide, lm_cloze_eval,
    paired_choice_eval, run_experiment, salient_features, to_canonical_json, train_cloze_classifier,
    AblationFamily, LabeledPart, LmMode,
};
use stylecloze::langmodel::{pmi, story_tokens, LanguageModel, NGramLm, Vocabulary};
use stylecloze::linmodel::LinearModel;
use stylecloze::synthetic::{SyntheticConfig, SyntheticCorpus};
use stylecloze::textproc::Annotator;

fn corpus() -> SyntheticCorpus {
    SyntheticCorpus::generate(&SyntheticConfig {
        roc_stories: 400,
        cloze_dev: 60,
        cloze_test: 40,
        paired: 30,
        ..SyntheticConfig::default()
    })
}

fn annotator() -> Annotator {
    Annotator::bundled(5, 3).unwrap()
}

const GRID: [f64; 2] = [1e-4, 1e-2];

fn unigram_lm(c: &SyntheticCorpus) -> NGramLm {
    let tokens: Vec<Vec<String>> = c.roc.iter().map(|s| story_tokens(&s.sentences)).collect();
    let vocab = Vocabulary::build(&tokens, 1);
    let seqs: Vec<Vec<u32>> = c.roc.iter().map(|s| vocab.encode_story(&s.sentences)).collect();
    NGramLm::train(vocab, &seqs, 1, 0.75).unwrap()
}

#[test]
fn marker_corpus_is_perfectly_separated() {
    let c = corpus();
    let a = annotator();
    let split = cloze_parts(&c.cloze_dev, &c.cloze_test, 0.1, 1).unwrap();
    for exp in [Experiment::RightVsWrong, Experiment::OriginalVsRight, Experiment::OriginalVsWrong] {
        let folds = build_experiment_dataset(exp, &c.roc, &split, 2).unwrap();
        let report = run_experiment(exp, &folds, &FeatureConfig::default(), &GRID, &a, serde_json::Value::Null).unwrap();
        assert_eq!(report.fold_accuracies.len(), exp.fold_count());
        assert_eq!(report.mean_accuracy, 1.0, "{}", report.to_text());
        let mean = report.fold_accuracies.iter().sum::<f64>() / report.fold_accuracies.len() as f64;
        assert_eq!(report.mean_accuracy, mean);
    }
}

#[test]
fn reports_are_reproducible_and_embed_fingerprints() {
    let c = corpus();
    let a = annotator();
    let split = cloze_parts(&c.cloze_dev, &c.cloze_test, 0.1, 1).unwrap();
    let folds = build_experiment_dataset(Experiment::RightVsWrong, &c.roc, &split, 2).unwrap();
    let echo = serde_json::json!({"seed": 1});
    let run = || {
        let r = run_experiment(Experiment::RightVsWrong, &folds, &FeatureConfig::default(), &GRID, &a, echo.clone()).unwrap();
        to_canonical_json(&r).unwrap()
    };
    let first = run();
    assert_eq!(first, run());
    assert!(first.contains(&folds[0].fingerprint()));
    assert!(first.contains("\"seed\": 1"));
}

#[test]
fn style_cloze_is_invariant_to_swapping_endings() {
    let c = corpus();
    let a = annotator();
    let split = cloze_parts(&c.cloze_dev, &c.cloze_test, 0.1, 1).unwrap();
    let clf = train_cloze_classifier(&split, &FeatureConfig::default(), &GRID, &a).unwrap();
    let decider = |inst: &ClozeInstance| cloze_decide(&clf, &a, inst).map(|d| d.chosen);
    let acc = cloze_eval(decider, &c.cloze_test).unwrap();
    let swapped: Vec<ClozeInstance> = c.cloze_test.iter().map(ClozeInstance::swapped).collect();
    assert_eq!(acc, 1.0);
    assert_eq!(cloze_eval(decider, &swapped).unwrap(), acc);
}

#[test]
fn constant_decider_on_balanced_data_scores_half() {
    let c = corpus();
    let balanced: Vec<ClozeInstance> = c
        .cloze_test
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let want = if i % 2 == 0 { Choice::A } else { Choice::B };
            if inst.gold == want { inst.clone() } else { inst.swapped() }
        })
        .collect();
    assert_eq!(cloze_eval(|_| Ok(Choice::B), &balanced).unwrap(), 0.5);
}

#[test]
fn context_independent_lm_gives_zero_pmi_and_ties() {
    let c = corpus();
    let lm = unigram_lm(&c);
    let inst = &c.cloze_test[0];
    let ctx = lm.vocab().encode_sentences(&inst.context);
    let ending = lm.vocab().encode_sentence(&inst.ending_a);
    assert_eq!(pmi(&lm, &ctx, &ending).unwrap().log_ratio, 0.0);
    for inst in &c.cloze_test {
        let d = lm_cloze_decide(&lm, inst, LmMode::Pmi).unwrap();
        assert_eq!(d.chosen, Choice::A);
        assert_eq!([d.scores[0].log_ratio, d.scores[1].log_ratio], [0.0, 0.0]);
    }
    let share_a = c.cloze_test.iter().filter(|i| i.gold == Choice::A).count() as f64 / c.cloze_test.len() as f64;
    assert_eq!(lm_cloze_eval(&lm, &c.cloze_test, LmMode::Pmi).unwrap(), share_a);
}

#[test]
fn combined_model_adds_three_features() {
    let c = corpus();
    let a = annotator();
    let split = cloze_parts(&c.cloze_dev, &c.cloze_test, 0.1, 1).unwrap();
    let tokens: Vec<Vec<String>> = c.roc.iter().map(|s| story_tokens(&s.sentences)).collect();
    let vocab = Vocabulary::build(&tokens, 2);
    let seqs: Vec<Vec<u32>> = c.roc.iter().map(|s| vocab.encode_story(&s.sentences)).collect();
    let lm = NGramLm::train(vocab, &seqs, 3, 0.75).unwrap();
    let report = combined_train_eval(&split, &c.cloze_dev, &c.cloze_test, &lm, &FeatureConfig::default(), &GRID, &a).unwrap();
    assert_eq!(report.decisions.len(), c.cloze_test.len());
    assert!(report.accuracy >= 0.9);
    for v in [&report.scaler.min, &report.scaler.max] {
        assert!(v.iter().all(|x| x.is_finite()));
    }

    // Missing context for a training ending is an error.
    assert!(combined_train_eval(&split, &c.cloze_test, &c.cloze_test, &lm, &FeatureConfig::default(), &GRID, &a).is_err());
}

#[test]
fn zeroed_lm_weights_match_style_only_predictions() {
    let c = corpus();
    let a = annotator();
    let split = cloze_parts(&c.cloze_dev, &c.cloze_test, 0.1, 1).unwrap();
    let clf = train_cloze_classifier(&split, &FeatureConfig::default(), &GRID, &a).unwrap();
    let mut weights = clf.model.weights.clone();
    weights.extend([0.0; 3]);
    let extended = LinearModel {
        weights,
        ..clf.model.clone()
    };
    for inst in &c.cloze_test {
        let x = clf.vector(&a.annotate(&inst.ending_a).unwrap()).unwrap();
        let wide = x.extended(&[0.3, 0.9, 0.1]);
        assert_eq!(wide.dim, x.dim + 3);
        assert_eq!(extended.predict_proba(&wide).unwrap(), clf.model.predict_proba(&x).unwrap());
    }
}

#[test]
fn ablation_with_no_retained_features_is_uninformative() {
    let c = SyntheticCorpus::generate(&SyntheticConfig {
        cloze_dev: 20,
        cloze_test: 40,
        ..SyntheticConfig::default()
    });
    let a = annotator();
    let split = cloze_parts(&c.cloze_dev, &c.cloze_test, 0.1, 1).unwrap();
    let base = FeatureConfig {
        min_count: 1000,
        ..FeatureConfig::default()
    };
    let report = ablation(&[AblationFamily::Word, AblationFamily::Char], &split, &base, &GRID, &a, serde_json::Value::Null).unwrap();
    for (_, fold) in &report.rows {
        assert_eq!(fold.feature_count, 0);
        assert_eq!(fold.accuracy, 0.5);
    }
    let full = ablation(&AblationFamily::ALL, &split, &FeatureConfig::default(), &GRID, &a, serde_json::Value::Null).unwrap();
    assert_eq!(full.rows.len(), 3);
    assert!(full.accuracy(AblationFamily::Full).unwrap() > 0.9);
}

#[test]
fn paired_choice_transfer() {
    let c = corpus();
    let a = annotator();
    let split = cloze_parts(&c.cloze_dev, &c.cloze_test, 0.1, 1).unwrap();
    let clf = train_cloze_classifier(&split, &FeatureConfig::default(), &GRID, &a).unwrap();
    assert_eq!(paired_choice_eval(&clf, &a, &c.paired).unwrap(), 1.0);

    let identical: Vec<PairedChoice> = (0..20)
        .map(|i| PairedChoice {
            id: format!("p{i}"),
            premise: "Ben lost it .".into(),
            alt1: "Sara was happy .".into(),
            alt2: "Sara was happy .".into(),
            gold: if i % 2 == 0 { Choice::A } else { Choice::B },
        })
        .collect();
    assert_eq!(paired_choice_eval(&clf, &a, &identical).unwrap(), 0.5);
}

#[test]
fn salient_features_rank_the_marker_first() {
    let c = corpus();
    let a = annotator();
    let split = cloze_parts(&c.cloze_dev, &c.cloze_test, 0.1, 1).unwrap();
    let clf = train_cloze_classifier(&split, &FeatureConfig::default(), &GRID, &a).unwrap();
    let train = LabeledPart::new(Experiment::RightVsWrong, &a, &split.train).unwrap();
    let report = salient_features(Experiment::RightVsWrong, &clf, &train.sentences, 5, 0.05).unwrap();
    let pos = &report.features.positive;
    let neg = &report.features.negative;
    assert!(pos.len() <= 5 && neg.len() <= 5 && !pos.is_empty());
    assert!(pos[0].feature.contains("zz"), "{}", report.to_text());
    assert!(pos.windows(2).all(|w| w[0].weight >= w[1].weight));
    assert!(neg.windows(2).all(|w| w[0].weight <= w[1].weight));
    assert!(pos.iter().all(|f| f.weight > 0.0 && f.doc_freq >= 0.05));
    assert!(neg.iter().all(|f| f.weight < 0.0 && f.doc_freq >= 0.05));

    let strict = salient_features(Experiment::RightVsWrong, &clf, &train.sentences, 5, 0.99).unwrap();
    assert!(strict.features.positive.iter().chain(&strict.features.negative).all(|f| f.doc_freq >= 0.99));
}

// Trains the L2-regularized logistic regression on a toy problem, checks
// its gradient against finite differences and runs a small grid search.
//
//     cargo run --example logistic_regression

use stylecloze::features::StyleVector;
use stylecloze::linmodel::{grid_search, train, Objective, DEFAULT_GRID};

fn vector(values: &[f64]) -> StyleVector {
    StyleVector {
        dim: values.len(),
        entries: values.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect(),
    }
}

fn main() -> stylecloze::Result<()> {
    // Feature 0 signals the positive class, feature 1 is noise.
    let rows = [[1.0, 0.2], [0.9, 0.8], [0.8, 0.1], [0.1, 0.9], [0.0, 0.3], [0.2, 0.5]];
    let xs: Vec<StyleVector> = rows.iter().map(|r| vector(r)).collect();
    let ys = [true, true, true, false, false, false];

    let model = train(&xs, &ys, 0.1)?;
    println!(
        "weights {:?} intercept {:.4} after {} iterations",
        model.weights, model.intercept, model.iterations
    );
    for (x, y) in xs.iter().zip(ys) {
        println!("  p = {:.3}  label {y}", model.predict_proba(x)?);
    }

    let objective = Objective::new(&xs, &ys, 0.1)?;
    let (w, b) = (vec![0.3, -0.2], 0.1);
    let (_, grad, _) = objective.value_and_gradient(&w, b);
    let h = 1e-6;
    for j in 0..2 {
        let (mut up, mut down) = (w.clone(), w.clone());
        up[j] += h;
        down[j] -= h;
        let numeric = (objective.value(&up, b) - objective.value(&down, b)) / (2.0 * h);
        println!("  d/dw{j}: analytic {:.8} numeric {:.8}", grad[j], numeric);
    }

    let search = grid_search(&xs[..4], &ys[..4], &xs[4..], &ys[4..], &DEFAULT_GRID)?;
    println!("\ngrid {:?}\nselected lambda {}", search.scores, search.selected_lambda);
    Ok(())
}

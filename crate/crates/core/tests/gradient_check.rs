use colorlex::agents::{Listener, Vocabulary};
use colorlex::neuralnet::{log_softmax, softmax, Activation, Mlp, MlpGrads};
use colorlex::ColorChip;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-4;
const TOL: f64 = 1e-3;

fn rel_err(a: f64, n: f64) -> f64 {
    let scale = a.abs().max(n.abs());
    if scale < 1e-7 {
        0.0
    } else {
        (a - n).abs() / scale
    }
}

fn ce(logits: &[f64], target: usize) -> f64 {
    -log_softmax(logits)[target]
}

fn dce(logits: &[f64], target: usize) -> Vec<f64> {
    let mut p = softmax(logits);
    p[target] -= 1.0;
    p
}

/// Central differences over every parameter of `params`, compared with `analytic`.
fn check(label: &str, analytic: &[Vec<f64>], params: &mut dyn FnMut(usize, usize, f64) -> f64) -> (usize, f64) {
    let mut worst = 0.0f64;
    let mut n = 0;
    for (t, g) in analytic.iter().enumerate() {
        for (i, &a) in g.iter().enumerate() {
            let up = params(t, i, H);
            let down = params(t, i, -H);
            let numeric = (up - down) / (2.0 * H);
            let e = rel_err(a, numeric);
            assert!(e <= TOL, "{label} tensor {t} index {i}: analytic {a} numeric {numeric} rel err {e}");
            worst = worst.max(e);
            n += 1;
        }
    }
    (n, worst)
}

fn mlp_case(hidden: Activation, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = Mlp::<f64>::init(&[9, 7, 6, 5], hidden, Activation::Identity, &mut rng).unwrap();
    let x: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
    let target = 3;

    let logits = net.forward(&x).unwrap();
    let (grads, dx): (MlpGrads<f64>, Vec<f64>) = net.gradients(&x, &dce(&logits, target)).unwrap();
    let analytic: Vec<Vec<f64>> = grads.slices().into_iter().map(<[f64]>::to_vec).collect();

    let mut perturbed = net.clone();
    let (n, worst) = check(&format!("{hidden:?} mlp"), &analytic, &mut |t, i, d| {
        let orig = perturbed.param_slices()[t][i];
        perturbed.param_slices_mut()[t][i] = orig + d;
        let l = ce(&perturbed.forward(&x).unwrap(), target);
        perturbed.param_slices_mut()[t][i] = orig;
        l
    });
    assert_eq!(n, net.param_count());

    let mut xp = x.clone();
    check(&format!("{hidden:?} input"), &[dx], &mut |_, i, d| {
        let orig = xp[i];
        xp[i] = orig + d;
        let l = ce(&net.forward(&xp).unwrap(), target);
        xp[i] = orig;
        l
    });
    println!("{hidden:?}: {n} parameters, worst relative error {worst:.2e}");
}

#[test]
fn mlp_relu_gradients_match_finite_differences() {
    for seed in 0..5 {
        mlp_case(Activation::Relu, seed);
    }
}

#[test]
fn mlp_identity_gradients_match_finite_differences() {
    for seed in 0..5 {
        mlp_case(Activation::Identity, seed);
    }
}

#[test]
fn listener_gradients_match_finite_differences() {
    let vocab = Vocabulary::new(vec!["blue".into(), "green".into(), "red".into()]).unwrap();
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let listener = Listener::<f64>::new(vocab.clone(), 6, 4, &mut rng).unwrap();
        let chip = |rng: &mut ChaCha8Rng| {
            ColorChip::new(rng.random_range(5.0..95.0), rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0)).unwrap()
        };
        let cands = [chip(&mut rng), chip(&mut rng), chip(&mut rng)];
        let (word, target) = ((seed % 3) as usize, (seed as usize + 1) % 3);

        let fwd = listener.forward_detail(word, &cands).unwrap();
        let d = dce(&fwd.scores, target);
        let mut grads = colorlex::agents::ListenerGrads::zeros_like(&listener);
        listener.accumulate(word, &fwd, &[d[0], d[1], d[2]], &mut grads).unwrap();
        let analytic: Vec<Vec<f64>> = grads.slices().into_iter().map(<[f64]>::to_vec).collect();

        let mut perturbed = listener.clone();
        check("listener", &analytic, &mut |t, i, d| {
            let orig = perturbed.param_slices_mut()[t][i];
            perturbed.param_slices_mut()[t][i] = orig + d;
            let l = ce(&perturbed.scores(word, &cands).unwrap(), target);
            perturbed.param_slices_mut()[t][i] = orig;
            l
        });
    }
}

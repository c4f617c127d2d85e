use ndarray::Array2;
use proptest::prelude::*;
use shadowsynth::attention::{
    attention_matrix, charbonnier, charbonnier_grad, modulated_attention, planar_distance, semantic_weights, softmax_rows,
    AttentionWindow, Reduction, CHARBONNIER_EPS,
};
use shadowsynth::compositor::{brighter, compose_pair_with, mask_value, shadow_mask, MaxRule};
use shadowsynth::image::{decode_pfm, encode_pfm};
use shadowsynth::scene::IndirectMax;
use shadowsynth::{Image, RadianceBuffers, Rgb, Vec3};

fn rgb() -> impl Strategy<Value = Rgb> {
    prop::array::uniform3(0.0..20.0f64).prop_map(Rgb)
}

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-r..r).prop_map(|[x, y, z]| Vec3::new(x, y, z))
}

fn unit() -> impl Strategy<Value = Vec3> {
    vec3(1.0).prop_filter("non-degenerate", |v| v.length() > 1e-3).prop_map(Vec3::normalized)
}

fn matrix(n: usize, d: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-3.0..3.0f64, n * d).prop_map(move |v| Array2::from_shape_vec((n, d), v).unwrap())
}

fn window(n: usize, d: usize) -> impl Strategy<Value = (AttentionWindow, Array2<f64>)> {
    (matrix(n, d), matrix(n, d), matrix(n, d), matrix(n, n), prop::collection::vec(0.0..1.0f64, n * n)).prop_map(
        move |(queries, keys, values, bias, w)| {
            let weights = Array2::from_shape_vec((n, n), w).unwrap();
            (AttentionWindow { queries, keys, values, bias }, weights)
        },
    )
}

fn permute_rows(m: &Array2<f64>, perm: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn(m.dim(), |(i, j)| m[[perm[i], j]])
}

fn permute_both(m: &Array2<f64>, perm: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn(m.dim(), |(i, j)| m[[perm[i], perm[j]]])
}

proptest! {
    #[test]
    fn mask_value_in_unit_range(free in 0.0..50.0f64, shadowed in 0.0..50.0f64, floor in 1e-3..1.0f64) {
        let m = mask_value(free, shadowed, floor);
        prop_assert!((0.0..=1.0).contains(&m));
        prop_assert!(m.is_finite());
    }

    #[test]
    fn mask_value_is_scale_invariant(free in 0.0..50.0f64, frac in 0.0..1.0f64, floor in 1e-3..1.0f64, k in 0.01..100.0f64) {
        let shadowed = free * frac;
        let a = mask_value(free, shadowed, floor);
        let b = mask_value(k * free, k * shadowed, k * floor);
        prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn identical_images_give_zero_mask(pixels in prop::collection::vec(rgb(), 12)) {
        let img = Image::from_rgb(4, 3, &pixels);
        let mask = shadow_mask(&img, &img, 0.1).unwrap();
        prop_assert!(mask.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn per_channel_brighter_dominates(free in rgb(), shadowed in rgb()) {
        let b = brighter(free, shadowed, MaxRule::PerChannel);
        for c in 0..3 {
            prop_assert!(b.0[c] >= free.0[c] && b.0[c] >= shadowed.0[c]);
        }
    }

    #[test]
    fn luminance_brighter_keeps_one_triple(free in rgb(), shadowed in rgb()) {
        let b = brighter(free, shadowed, MaxRule::Luminance);
        prop_assert!(b == free || b == shadowed);
        prop_assert!(b.luminance() >= free.luminance().max(shadowed.luminance()) - 1e-12);
    }

    #[test]
    fn composite_adds_passes_and_dominates(
        dr in prop::collection::vec((rgb(), prop::array::uniform3(0.0..1.0f64)), 6),
        idr_s in prop::collection::vec(rgb(), 6),
        idr_f in prop::collection::vec(rgb(), 6),
    ) {
        let dr_f: Vec<Rgb> = dr.iter().map(|(f, _)| *f).collect();
        let dr_s: Vec<Rgb> = dr.iter().map(|(f, k)| Rgb([f.0[0] * k[0], f.0[1] * k[1], f.0[2] * k[2]])).collect();
        let buffers = RadianceBuffers {
            width: 3,
            height: 2,
            spp: 1,
            dr_s: dr_s.clone(),
            idr_s: idr_s.clone(),
            dr_f,
            idr_f,
            depth: vec![1.0; 6],
            normal: vec![Vec3::Z; 6],
            shadow_var: vec![Rgb::BLACK; 6],
            indirect_max: IndirectMax::PerPixel,
        };
        let pair = compose_pair_with(&buffers, MaxRule::PerChannel).unwrap();
        for i in 0..6 {
            let expect = dr_s[i] + idr_s[i];
            for c in 0..3 {
                prop_assert!((pair.shadowed[i].0[c] - expect.0[c]).abs() < 1e-12);
                prop_assert!(pair.shadow_free[i].0[c] >= pair.shadowed[i].0[c]);
            }
        }
        let mask = shadow_mask(&pair.shadowed_image(), &pair.shadow_free_image(), 0.1).unwrap();
        prop_assert!(mask.data.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn planar_distance_symmetric_and_nonnegative(p in vec3(10.0), q in vec3(10.0), n in unit(), m in unit()) {
        let a = planar_distance(p, n, q, m);
        let b = planar_distance(q, m, p, n);
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!(planar_distance(p, n, p, m) == 0.0);
    }

    #[test]
    fn coplanar_points_have_zero_planar_distance(p in vec3(10.0), n in unit(), s in -5.0..5.0f64, t in -5.0..5.0f64) {
        let (u, v) = n.orthonormal_basis();
        let q = p + u * s + v * t;
        prop_assert!(planar_distance(p, n, q, n) < 1e-9);
        prop_assert!(planar_distance(p, n, q, -n) < 1e-9);
    }

    #[test]
    fn softmax_rows_are_distributions(mut scores in matrix(5, 7)) {
        scores *= 100.0;
        softmax_rows(&mut scores);
        for row in scores.rows() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn attention_rows_are_distributions((w, weights) in window(6, 4)) {
        let a = attention_matrix(&w, &weights).unwrap();
        for row in a.rows() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn attention_is_permutation_equivariant((w, weights) in window(6, 4), perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
        let out = modulated_attention(&w, &weights).unwrap();
        let permuted = AttentionWindow {
            queries: permute_rows(&w.queries, &perm),
            keys: permute_rows(&w.keys, &perm),
            values: permute_rows(&w.values, &perm),
            bias: permute_both(&w.bias, &perm),
        };
        let out_p = modulated_attention(&permuted, &permute_both(&weights, &perm)).unwrap();
        let expect = permute_rows(&out, &perm);
        for (a, b) in out_p.iter().zip(expect.iter()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn semantic_weights_symmetric_in_unit_range(mut features in matrix(6, 5), zero_row in 0..7usize) {
        if zero_row < 6 {
            features.row_mut(zero_row).fill(0.0);
        }
        let (w, _) = semantic_weights(&features);
        for i in 0..6 {
            for j in 0..6 {
                prop_assert!((0.0..=1.0).contains(&w[[i, j]]));
                prop_assert!((w[[i, j]] - w[[j, i]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn charbonnier_at_least_eps(a in prop::collection::vec(-5.0..5.0f64, 1..20), shift in -1.0..1.0f64) {
        let b: Vec<f64> = a.iter().map(|v| v + shift).collect();
        for r in [Reduction::Global, Reduction::PerValueMean] {
            prop_assert!(charbonnier(&a, &b, CHARBONNIER_EPS, r).unwrap() >= CHARBONNIER_EPS);
            prop_assert!((charbonnier(&a, &a, CHARBONNIER_EPS, r).unwrap() - CHARBONNIER_EPS).abs() < 1e-15);
        }
    }

    #[test]
    fn charbonnier_gradient_matches_finite_differences(
        a in prop::collection::vec(-2.0..2.0f64, 1..8),
        b in prop::collection::vec(-2.0..2.0f64, 8),
        eps in 0.05..1.0f64,
    ) {
        let b = &b[..a.len()];
        let h = 1e-6;
        for r in [Reduction::Global, Reduction::PerValueMean] {
            let grad = charbonnier_grad(&a, b, eps, r).unwrap();
            for i in 0..a.len() {
                let mut up = a.clone();
                let mut down = a.clone();
                up[i] += h;
                down[i] -= h;
                let fd = (charbonnier(&up, b, eps, r).unwrap() - charbonnier(&down, b, eps, r).unwrap()) / (2.0 * h);
                prop_assert!((fd - grad[i]).abs() <= 1e-6 * (1.0 + fd.abs()), "{:?} {}: {} vs {}", r, i, fd, grad[i]);
            }
        }
    }

    #[test]
    fn pfm_round_trip_is_exact(pixels in prop::collection::vec(rgb(), 6)) {
        let img = Image::from_rgb(2, 3, &pixels);
        let back = decode_pfm(&encode_pfm(&img).unwrap()).unwrap();
        prop_assert_eq!(img, back);
    }

    #[test]
    fn rotate_z_preserves_length_and_height(v in vec3(10.0), angle in -7.0..7.0f64) {
        let r = v.rotate_z(angle);
        prop_assert!((r.length() - v.length()).abs() < 1e-9);
        prop_assert!(r.z == v.z);
    }
}

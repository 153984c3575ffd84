//! Seeded synthetic detector output. Each image gets a handful of disjoint
//! ground-truth objects; each object sprays a cluster of jittered candidate
//! boxes around itself whose scores decay with how far they drifted. That
//! reproduces the structure real detectors feed into suppression — many
//! tight clusters, one strong box per cluster — at desk scale.
//!
//! Generation is keyed by a portable, explicitly chosen PRNG (ChaCha8) and
//! every image is seeded independently as `seed ⊕ image index`, so any image
//! can be regenerated alone and whole corpora are byte-stable across
//! platforms and runs.

use crate::detection::DetectionSet;
use crate::eval::GroundTruthBox;
use crate::geometry::BoundingBox;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

/// Knobs for the generator. Counts are means of per-image/per-object
/// distributions, not exact quotas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub num_images: usize,
    /// Mean objects per image (Poisson).
    pub objects_per_image: f64,
    /// Mean candidate boxes per object (1 + Poisson(mean − 1) for means ≥ 1,
    /// a coin flip below that).
    pub boxes_per_object: f64,
    /// Image width and height in pixels.
    pub image_size: (u32, u32),
    /// Center and extent perturbation as a fraction of object size. The
    /// default is calibrated so the suppression graph at threshold 0.7
    /// fragments the way detector output does: mostly tiny components with
    /// a modest tail, rather than one blob per object.
    pub jitter_scale: f64,
    /// How fast scores fall off with centre drift; larger = sharper winner.
    pub score_decay: f64,
    pub num_categories: u32,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            num_images: 100,
            objects_per_image: 10.0,
            boxes_per_object: 30.0,
            image_size: (640, 640),
            jitter_scale: 0.2,
            score_decay: 3.0,
            num_categories: 8,
            seed: 42,
        }
    }
}

/// One generated image: the detector-style candidates plus the objects they
/// were spawned from.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthImage {
    pub detections: DetectionSet,
    pub ground_truth: Vec<GroundTruthBox>,
}

/// Object side lengths are log-uniform in this absolute pixel range (clamped
/// to the image), so growing the image area at constant object density keeps
/// cluster geometry unchanged.
const SIZE_RANGE_PX: (f64, f64) = (16.0, 128.0);

/// Placement attempts before giving up on keeping ground truth disjoint.
const PLACEMENT_ATTEMPTS: usize = 64;

pub fn generate(params: &SynthParams) -> Vec<SynthImage> {
    (0..params.num_images).map(|i| generate_image(params, i)).collect()
}

/// Generate a single image, deterministically in `params.seed` and `index`.
pub fn generate_image(params: &SynthParams, index: usize) -> SynthImage {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ index as u64);
    let (img_w, img_h) = (f64::from(params.image_size.0), f64::from(params.image_size.1));
    let jitter = params.jitter_scale;
    let unit_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut ground_truth: Vec<GroundTruthBox> = Vec::new();
    let mut boxes: Vec<(BoundingBox, f64, u32)> = Vec::new();
    let n_objects = sample_poisson(&mut rng, params.objects_per_image);
    for _ in 0..n_objects {
        let category =
            if params.num_categories > 1 { rng.gen_range(0..params.num_categories) } else { 0 };
        let w = log_uniform(&mut rng, SIZE_RANGE_PX.0, SIZE_RANGE_PX.1).min(img_w);
        let h = log_uniform(&mut rng, SIZE_RANGE_PX.0, SIZE_RANGE_PX.1).min(img_h);
        let gt = place_disjoint(&mut rng, &ground_truth, w, h, img_w, img_h);
        ground_truth.push(GroundTruthBox { bbox: gt, category });

        let base_score = rng.gen_range(0.6..=0.95);
        let n_boxes = sample_box_count(&mut rng, params.boxes_per_object);
        let (cx, cy) = ((gt.x_lt + gt.x_rb) / 2.0, (gt.y_lt + gt.y_rb) / 2.0);
        for _ in 0..n_boxes {
            let dx = jitter * w * unit_normal.sample(&mut rng);
            let dy = jitter * h * unit_normal.sample(&mut rng);
            let fx = (1.0 + jitter * unit_normal.sample(&mut rng)).max(0.05);
            let fy = (1.0 + jitter * unit_normal.sample(&mut rng)).max(0.05);
            let (bw, bh) = (w * fx, h * fy);
            let drift = ((dx / w).powi(2) + (dy / h).powi(2)).sqrt();
            let noise = 0.01 * unit_normal.sample(&mut rng);
            let score = (base_score * (-params.score_decay * drift).exp() + noise).clamp(1e-4, 1.0);
            let x1 = (cx + dx - bw / 2.0).clamp(0.0, img_w);
            let x2 = (cx + dx + bw / 2.0).clamp(0.0, img_w);
            let y1 = (cy + dy - bh / 2.0).clamp(0.0, img_h);
            let y2 = (cy + dy + bh / 2.0).clamp(0.0, img_h);
            boxes.push((BoundingBox::new(x1, y1, x2, y2), score, category));
        }
    }

    SynthImage {
        detections: DetectionSet::from_boxes(format!("synth-{index:06}"), boxes),
        ground_truth,
    }
}

fn sample_poisson<R: Rng>(rng: &mut R, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as usize
}

fn sample_box_count<R: Rng>(rng: &mut R, mean: f64) -> usize {
    if mean >= 1.0 {
        1 + sample_poisson(rng, mean - 1.0)
    } else if mean > 0.0 {
        usize::from(rng.gen::<f64>() < mean)
    } else {
        0
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..=hi.ln()).exp()
}

/// Uniform placement, re-rolled while the new object would overlap an
/// existing one; after enough failures the last position is accepted so the
/// generator always terminates.
fn place_disjoint<R: Rng>(
    rng: &mut R,
    placed: &[GroundTruthBox],
    w: f64,
    h: f64,
    img_w: f64,
    img_h: f64,
) -> BoundingBox {
    let max_x = (img_w - w).max(0.0);
    let max_y = (img_h - h).max(0.0);
    let mut gt = BoundingBox::new(0.0, 0.0, w.min(img_w), h.min(img_h));
    for _ in 0..PLACEMENT_ATTEMPTS {
        let x = rng.gen_range(0.0..=max_x);
        let y = rng.gen_range(0.0..=max_y);
        gt = BoundingBox::new(x, y, x + w.min(img_w), y + h.min(img_h));
        if placed.iter().all(|g| !overlaps(&g.bbox, &gt)) {
            break;
        }
    }
    gt
}

fn overlaps(a: &BoundingBox, b: &BoundingBox) -> bool {
    a.x_lt < b.x_rb && b.x_lt < a.x_rb && a.y_lt < b.y_rb && b.y_lt < a.y_rb
}

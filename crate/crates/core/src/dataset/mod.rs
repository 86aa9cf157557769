//! Annotated data: bounding boxes, labeled patches, class balancing, splits
//! and dataset persistence.

mod store;
mod synth;
mod voc;

pub use store::{load_patchset, load_patchsets, save_patchsets};
pub use synth::{synthesize, SplitCounts, SynthConfig};
pub use voc::{default_label_map, parse_voc_xml};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::rng;

/// Class identifier. The four base classes have fixed indices; few-shot
/// episodes may introduce novel classes at indices >= 4.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DefectClass(pub usize);

impl DefectClass {
    pub const CRACK: DefectClass = DefectClass(0);
    pub const PINHOLE: DefectClass = DefectClass(1);
    pub const HOLE: DefectClass = DefectClass(2);
    pub const SPATTER: DefectClass = DefectClass(3);

    pub const BASE_COUNT: usize = 4;
    pub const BASE_NAMES: [&'static str; 4] = ["crack", "pinhole", "hole", "spatter"];

    pub fn index(self) -> usize {
        self.0
    }

    pub fn name(self) -> String {
        match self.0 {
            i if i < 4 => Self::BASE_NAMES[i].to_string(),
            i => format!("class{i}"),
        }
    }
}

/// Axis-aligned bounding box in pixel coordinates.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct BoundingBox {
    pub xmin: i64,
    pub ymin: i64,
    pub xmax: i64,
    pub ymax: i64,
}

impl BoundingBox {
    /// Clamp to an image and return the half-open pixel rectangle, or None
    /// if the intersection is empty.
    pub fn clamp_to(&self, width: usize, height: usize) -> Option<(usize, usize, usize, usize)> {
        let x0 = self.xmin.clamp(0, width as i64);
        let y0 = self.ymin.clamp(0, height as i64);
        let x1 = self.xmax.clamp(0, width as i64);
        let y1 = self.ymax.clamp(0, height as i64);
        if x0 < x1 && y0 < y1 {
            Some((x0 as usize, y0 as usize, x1 as usize, y1 as usize))
        } else {
            None
        }
    }
}

/// One labeled bounding box of one image.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Annotation {
    pub image_id: String,
    pub bbox: BoundingBox,
    pub label: DefectClass,
}

/// Where a patch's label came from.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Human,
    Pseudo { round: usize },
    Synthetic,
}

/// A fixed-size classifier input with its label and bookkeeping.
///
/// Unlabeled pool entries generated synthetically carry a hidden ground
/// truth that is reachable only through [`LabeledPatch::eval_only_ground_truth`];
/// the pseudo-labeling engine never consults it.
#[derive(Clone, PartialEq, Debug)]
pub struct LabeledPatch {
    pub patch: GrayImage,
    pub label: Option<DefectClass>,
    pub provenance: Provenance,
    pub confidence: f64,
    hidden_truth: Option<DefectClass>,
}

impl LabeledPatch {
    pub fn human(patch: GrayImage, label: DefectClass) -> Self {
        LabeledPatch { patch, label: Some(label), provenance: Provenance::Human, confidence: 1.0, hidden_truth: None }
    }

    pub fn synthetic(patch: GrayImage, label: DefectClass) -> Self {
        LabeledPatch {
            patch,
            label: Some(label),
            provenance: Provenance::Synthetic,
            confidence: 1.0,
            hidden_truth: Some(label),
        }
    }

    /// An unlabeled pool entry whose true class is retained for evaluation
    /// only.
    pub fn synthetic_unlabeled(patch: GrayImage, truth: DefectClass) -> Self {
        LabeledPatch {
            patch,
            label: None,
            provenance: Provenance::Synthetic,
            confidence: 1.0,
            hidden_truth: Some(truth),
        }
    }

    /// An unlabeled pool entry with no recorded ground truth.
    pub fn unlabeled(patch: GrayImage) -> Self {
        LabeledPatch { patch, label: None, provenance: Provenance::Human, confidence: 1.0, hidden_truth: None }
    }

    pub(crate) fn from_parts(
        patch: GrayImage,
        label: Option<DefectClass>,
        provenance: Provenance,
        confidence: f64,
        hidden_truth: Option<DefectClass>,
    ) -> Self {
        LabeledPatch { patch, label, provenance, confidence, hidden_truth }
    }

    /// Turn a pool entry into a pseudo-labeled training sample. The hidden
    /// ground truth, if any, is carried along untouched.
    pub fn assign_pseudo(mut self, label: DefectClass, confidence: f64, round: usize) -> Self {
        self.label = Some(label);
        self.confidence = confidence;
        self.provenance = Provenance::Pseudo { round };
        self
    }

    /// Evaluation-only accessor for the synthetic ground truth. Training and
    /// selection logic must not call this.
    pub fn eval_only_ground_truth(&self) -> Option<DefectClass> {
        self.hidden_truth
    }
}

/// Which experimental split a patch set belongs to.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    Train,
    Test,
    UnlabeledPool,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::UnlabeledPool => "pool",
        }
    }
}

/// An ordered collection of patches belonging to one split, with per-class
/// label counts kept consistent with the contents.
#[derive(Clone, PartialEq, Debug)]
pub struct PatchSet {
    split: Split,
    patches: Vec<LabeledPatch>,
    class_counts: Vec<usize>,
}

impl PatchSet {
    pub fn new(split: Split, patches: Vec<LabeledPatch>) -> Result<Self> {
        if split == Split::UnlabeledPool {
            if let Some(i) = patches.iter().position(|p| p.label.is_some()) {
                return Err(Error::Input(format!(
                    "unlabeled-pool entry {i} carries a label"
                )));
            }
        }
        let mut set = PatchSet { split, patches: Vec::new(), class_counts: vec![0; DefectClass::BASE_COUNT] };
        for p in patches {
            set.push(p);
        }
        Ok(set)
    }

    pub fn empty(split: Split) -> Self {
        PatchSet { split, patches: Vec::new(), class_counts: vec![0; DefectClass::BASE_COUNT] }
    }

    pub fn push(&mut self, patch: LabeledPatch) {
        if let Some(label) = patch.label {
            if label.index() >= self.class_counts.len() {
                self.class_counts.resize(label.index() + 1, 0);
            }
            self.class_counts[label.index()] += 1;
        }
        self.patches.push(patch);
    }

    /// Remove and return the patch at `index`, keeping counts consistent.
    pub fn remove(&mut self, index: usize) -> LabeledPatch {
        let patch = self.patches.remove(index);
        if let Some(label) = patch.label {
            self.class_counts[label.index()] -= 1;
        }
        patch
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn patches(&self) -> &[LabeledPatch] {
        &self.patches
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// Labeled-sample count per class index.
    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// Keep only the patches selected by the predicate (used to carve
    /// episode subsets out of stored datasets).
    pub fn filtered(&self, keep: impl Fn(&LabeledPatch) -> bool) -> Result<PatchSet> {
        PatchSet::new(self.split, self.patches.iter().filter(|p| keep(p)).cloned().collect())
    }
}

/// Loss weights that re-balance an uneven class distribution:
/// weight_c = N / (K * n_c).
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct ClassWeights {
    pub weights: Vec<f64>,
}

impl ClassWeights {
    pub fn uniform(k: usize) -> Self {
        ClassWeights { weights: vec![1.0; k] }
    }
}

/// Balanced class weights from per-class sample counts.
pub fn balanced_weights(counts: &[usize]) -> Result<ClassWeights> {
    if counts.is_empty() {
        return Err(Error::Input("no classes".into()));
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Input(format!("class {c} has zero samples; weights are undefined")));
    }
    let n: usize = counts.iter().sum();
    let k = counts.len();
    let weights = counts.iter().map(|&c| n as f64 / (k as f64 * c as f64)).collect();
    Ok(ClassWeights { weights })
}

/// Deterministic stratified split into train and test.
///
/// `fractions` are the (train, test) shares; they must each lie in (0, 1)
/// and sum to 1. Same inputs and seed give the same member lists.
pub fn split(
    patches: Vec<LabeledPatch>,
    fractions: (f64, f64),
    seed: u64,
) -> Result<(PatchSet, PatchSet)> {
    let (train_frac, test_frac) = fractions;
    for f in [train_frac, test_frac] {
        if !(0.0 < f && f < 1.0) {
            return Err(Error::Parameter(format!("split fraction {f} outside (0, 1)")));
        }
    }
    if (train_frac + test_frac - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter(format!(
            "split fractions must sum to 1, got {train_frac} + {test_frac}"
        )));
    }
    if patches.iter().any(|p| p.label.is_none()) {
        return Err(Error::Input("cannot stratify unlabeled patches".into()));
    }

    // Group indices per class in first-seen class order, then shuffle each
    // group with one sequential seeded stream.
    let mut by_class: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut class_order = Vec::new();
    for (i, p) in patches.iter().enumerate() {
        let c = p.label.expect("checked above").index();
        if !by_class.contains_key(&c) {
            class_order.push(c);
        }
        by_class.entry(c).or_default().push(i);
    }
    class_order.sort_unstable();

    let mut rng = rng::seeded(seed);
    let total = patches.len();
    let train_total = (train_frac * total as f64).round() as usize;

    // Per-class quotas by largest remainder so the global train size is
    // exactly round(frac * N) while per-class proportions stay within one
    // sample of the target.
    let mut quotas: Vec<(usize, usize, f64)> = class_order
        .iter()
        .map(|&c| {
            let n = by_class[&c].len();
            let exact = train_frac * n as f64;
            (c, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = quotas.iter().map(|q| q.1).sum();
    let mut leftover = train_total.saturating_sub(assigned);
    // Hand out the remaining slots by descending fractional part, class
    // index as the tie break.
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        quotas[b].2.partial_cmp(&quotas[a].2).unwrap().then(quotas[a].0.cmp(&quotas[b].0))
    });
    for &qi in &order {
        if leftover == 0 {
            break;
        }
        if quotas[qi].1 < by_class[&quotas[qi].0].len() {
            quotas[qi].1 += 1;
            leftover -= 1;
        }
    }

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for &(c, take, _) in &quotas {
        let mut idx = by_class[&c].clone();
        rng::shuffle(&mut rng, &mut idx);
        train_idx.extend_from_slice(&idx[..take]);
        test_idx.extend_from_slice(&idx[take..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let mut patches: Vec<Option<LabeledPatch>> = patches.into_iter().map(Some).collect();
    let take = |idx: &[usize], patches: &mut Vec<Option<LabeledPatch>>| {
        idx.iter().map(|&i| patches[i].take().expect("index used once")).collect::<Vec<_>>()
    };
    let train = PatchSet::new(Split::Train, take(&train_idx, &mut patches))?;
    let test = PatchSet::new(Split::Test, take(&test_idx, &mut patches))?;
    Ok((train, test))
}

/// Bilinear resize with corner alignment: source corners map exactly onto
/// destination corners, and a same-size resize is the identity.
pub fn resize_bilinear(src: &GrayImage, width: usize, height: usize) -> GrayImage {
    let sx = if width > 1 { (src.width() - 1) as f64 / (width - 1) as f64 } else { 0.0 };
    let sy = if height > 1 { (src.height() - 1) as f64 / (height - 1) as f64 } else { 0.0 };
    GrayImage::from_fn(width, height, |x, y| {
        let fx = x as f64 * sx;
        let fy = y as f64 * sy;
        let x0 = fx.floor() as usize;
        let y0 = fy.floor() as usize;
        let x1 = (x0 + 1).min(src.width() - 1);
        let y1 = (y0 + 1).min(src.height() - 1);
        let tx = fx - x0 as f64;
        let ty = fy - y0 as f64;
        let v00 = src.get(x0, y0) as f64;
        let v10 = src.get(x1, y0) as f64;
        let v01 = src.get(x0, y1) as f64;
        let v11 = src.get(x1, y1) as f64;
        let top = v00 + (v10 - v00) * tx;
        let bottom = v01 + (v11 - v01) * tx;
        (top + (bottom - top) * ty).round().clamp(0.0, 255.0) as u8
    })
}

/// Crop each in-bounds annotation and resize it to `side` x `side`.
/// Annotations whose box misses the image entirely are skipped with a
/// warning.
pub fn extract_patches(
    img: &GrayImage,
    annotations: &[Annotation],
    side: usize,
) -> Result<Vec<LabeledPatch>> {
    if side < 8 {
        return Err(Error::Parameter(format!("patch side must be >= 8, got {side}")));
    }
    let mut out = Vec::new();
    for ann in annotations {
        match ann.bbox.clamp_to(img.width(), img.height()) {
            Some((x0, y0, x1, y1)) => {
                let crop = img.crop(x0, y0, x1, y1)?;
                let resized = if crop.width() == side && crop.height() == side {
                    crop
                } else {
                    resize_bilinear(&crop, side, side)
                };
                out.push(LabeledPatch::human(resized, ann.label));
            }
            None => {
                log::warn!(
                    "skipping annotation of {}: box {:?} does not intersect the {}x{} image",
                    ann.image_id,
                    ann.bbox,
                    img.width(),
                    img.height()
                );
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patch_with_label(c: usize) -> LabeledPatch {
        LabeledPatch::human(GrayImage::filled(8, 8, c as u8), DefectClass(c))
    }

    #[test]
    fn balanced_weights_match_the_formula_on_reference_supports() {
        let w = balanced_weights(&[50, 124, 258, 318]).unwrap();
        let expected = [3.75, 1.5121, 0.7267, 0.5896];
        for (got, want) in w.weights.iter().zip(expected) {
            assert!((got - want).abs() < 5e-5, "{got} vs {want}");
        }
    }

    #[test]
    fn balanced_weights_on_balanced_counts_are_all_one() {
        let w = balanced_weights(&[10, 10, 10, 10]).unwrap();
        assert_eq!(w.weights, vec![1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn balanced_weights_two_class_example() {
        let w = balanced_weights(&[1, 3]).unwrap();
        assert!((w.weights[0] - 2.0).abs() < 1e-12);
        assert!((w.weights[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn balanced_weights_support_weighted_sum_recovers_total() {
        for counts in [vec![50, 124, 258, 318], vec![7, 3], vec![5, 5, 5]] {
            let n: usize = counts.iter().sum();
            let w = balanced_weights(&counts).unwrap();
            let sum: f64 = counts.iter().zip(&w.weights).map(|(&c, &wc)| c as f64 * wc).sum();
            assert!((sum - n as f64).abs() <= 1e-9 * n as f64);
        }
    }

    #[test]
    fn balanced_weights_reject_zero_counts() {
        assert!(matches!(balanced_weights(&[5, 0, 3]), Err(Error::Input(_))));
    }

    #[test]
    fn split_is_stratified_and_deterministic() {
        // 40 / 30 / 20 / 10 samples over the four classes.
        let mut patches = Vec::new();
        for (c, n) in [(0, 40), (1, 30), (2, 20), (3, 10)] {
            for _ in 0..n {
                patches.push(patch_with_label(c));
            }
        }
        let (train, test) = split(patches.clone(), (0.9, 0.1), 7).unwrap();
        assert_eq!(train.len(), 90);
        assert_eq!(test.len(), 10);
        for c in 0..4 {
            let n_c = [40.0, 30.0, 20.0, 10.0][c];
            let got = train.class_counts()[c] as f64;
            assert!((got - 0.9 * n_c).abs() <= 1.0, "class {c}: {got}");
        }

        let (train2, test2) = split(patches, (0.9, 0.1), 7).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
    }

    #[test]
    fn split_at_reference_scale() {
        // 8284 patches at a 0.9 train share, mirroring the reference corpus
        // proportions of roughly 7455 / 829.
        let mut patches = Vec::new();
        for c in 0..4 {
            for _ in 0..2071 {
                patches.push(patch_with_label(c));
            }
        }
        let (train, test) = split(patches, (0.9, 0.1), 11).unwrap();
        assert!((train.len() as i64 - 7455).abs() <= 2, "train {}", train.len());
        assert!((test.len() as i64 - 829).abs() <= 2, "test {}", test.len());
        assert_eq!(train.len() + test.len(), 8284);
    }

    #[test]
    fn split_rejects_bad_fractions() {
        let patches = vec![patch_with_label(0)];
        assert!(split(patches.clone(), (1.2, -0.2), 0).is_err());
        assert!(split(patches.clone(), (0.5, 0.4), 0).is_err());
        assert!(split(patches, (0.0, 1.0), 0).is_err());
    }

    #[test]
    fn resize_preserves_corners() {
        let src = GrayImage::new(2, 2, vec![0, 100, 200, 255]).unwrap();
        let out = resize_bilinear(&src, 4, 4);
        assert_eq!(out.get(0, 0), 0);
        assert_eq!(out.get(3, 0), 100);
        assert_eq!(out.get(0, 3), 200);
        assert_eq!(out.get(3, 3), 255);
    }

    #[test]
    fn unit_scale_resize_is_identity() {
        let src = GrayImage::from_fn(9, 9, |x, y| (x * 13 + y * 31) as u8);
        assert_eq!(resize_bilinear(&src, 9, 9), src);
    }

    #[test]
    fn extract_whole_image_box_resizes_the_image() {
        let img = GrayImage::from_fn(20, 20, |x, y| (x + y) as u8);
        let ann = Annotation {
            image_id: "img".into(),
            bbox: BoundingBox { xmin: 0, ymin: 0, xmax: 20, ymax: 20 },
            label: DefectClass::CRACK,
        };
        let patches = extract_patches(&img, &[ann], 10).unwrap();
        assert_eq!(patches.len(), 1);
        assert_eq!(patches[0].patch, resize_bilinear(&img, 10, 10));
        assert_eq!(patches[0].provenance, Provenance::Human);
    }

    #[test]
    fn extract_exact_side_box_is_a_bit_identical_crop() {
        let img = GrayImage::from_fn(32, 32, |x, y| (x * 7 + y * 3) as u8);
        let ann = Annotation {
            image_id: "img".into(),
            bbox: BoundingBox { xmin: 5, ymin: 9, xmax: 13, ymax: 17 },
            label: DefectClass::HOLE,
        };
        let patches = extract_patches(&img, &[ann], 8).unwrap();
        assert_eq!(patches[0].patch, img.crop(5, 9, 13, 17).unwrap());
    }

    #[test]
    fn out_of_bounds_boxes_are_clamped_and_empty_ones_skipped() {
        let img = GrayImage::filled(16, 16, 10);
        let anns = vec![
            Annotation {
                image_id: "a".into(),
                bbox: BoundingBox { xmin: -5, ymin: -5, xmax: 8, ymax: 8 },
                label: DefectClass::CRACK,
            },
            Annotation {
                image_id: "b".into(),
                bbox: BoundingBox { xmin: 20, ymin: 20, xmax: 30, ymax: 30 },
                label: DefectClass::HOLE,
            },
        ];
        let patches = extract_patches(&img, &anns, 8).unwrap();
        assert_eq!(patches.len(), 1, "in-bounds count is preserved, empty boxes skipped");
    }

    #[test]
    fn small_side_is_rejected() {
        let img = GrayImage::filled(16, 16, 10);
        assert!(matches!(extract_patches(&img, &[], 4), Err(Error::Parameter(_))));
    }

    #[test]
    fn pool_patchset_rejects_labeled_entries() {
        let labeled = patch_with_label(0);
        assert!(PatchSet::new(Split::UnlabeledPool, vec![labeled]).is_err());
        let unlabeled = LabeledPatch::synthetic_unlabeled(GrayImage::filled(8, 8, 0), DefectClass::CRACK);
        let set = PatchSet::new(Split::UnlabeledPool, vec![unlabeled]).unwrap();
        assert_eq!(set.class_counts(), &[0, 0, 0, 0]);
        assert_eq!(set.patches()[0].eval_only_ground_truth(), Some(DefectClass::CRACK));
    }

    #[test]
    fn patchset_counts_track_pushes_and_removals() {
        let mut set = PatchSet::empty(Split::Train);
        set.push(patch_with_label(2));
        set.push(patch_with_label(2));
        set.push(patch_with_label(0));
        assert_eq!(set.class_counts(), &[1, 0, 2, 0]);
        let removed = set.remove(0);
        assert_eq!(removed.label, Some(DefectClass(2)));
        assert_eq!(set.class_counts(), &[1, 0, 1, 0]);
    }
}

#pragma once

#include <string>
#include <vector>

#include "retex/raster.hpp"
#include "retex/texture_detect.hpp"

namespace retex {

enum class SeamAxis {
    kVertical,  // one pixel per row; removal shrinks width
    kHorizontal // one pixel per column; removal shrinks height
};

// Monotone 8-connected minimum-significance path.
struct Seam {
    SeamAxis axis = SeamAxis::kVertical;
    std::vector<int> path; // column per row (vertical) or row per column
    double cost = 0.0;
};

struct CropWindow {
    int x = 0, y = 0, w = 0, h = 0;
};

// One recorded retargeting action. Seam paths are stored in the coordinate
// frame current at the time the action applies, so replay runs in order.
struct OpEntry {
    enum class Type { kRemoveSeam, kInsertSeam, kScale, kCrop };
    Type type = Type::kRemoveSeam;
    Seam seam;
    int to_w = 0, to_h = 0; // scale target
    CropWindow window;
};

struct OperationLog {
    int source_w = 0, source_h = 0;
    int target_w = 0, target_h = 0;
    std::vector<OpEntry> entries;

    int count(OpEntry::Type t) const;
    bool empty() const { return entries.empty(); }

    std::string to_json() const;
    static OperationLog from_json(const std::string& text);
};

// RTV-style structure-preserving smoothing: iteratively reweighted
// quadratic smoothing whose edge weights come from the windowed variation
// maps of the current estimate, solved against the original image.
Raster structure_smooth(const Raster& r, double sigma = 3.0, int iterations = 3,
                        double lambda = 0.015);

// Dynamic-programming minimum seam. Ties prefer the smaller column (resp.
// row) index, both at the endpoint choice and at every backtrack step.
Seam min_seam(const ScalarField& sig, SeamAxis axis);

Raster remove_seam(const Raster& r, const Seam& s);
ScalarField remove_seam(const ScalarField& f, const Seam& s);
LabelMap remove_seam(const LabelMap& m, const Seam& s);

// Seam duplication with neighbor averaging; the enlargement counterpart.
Raster insert_seam(const Raster& r, const Seam& s);
ScalarField insert_seam(const ScalarField& f, const Seam& s);
LabelMap insert_seam(const LabelMap& m, const Seam& s);

// The target-sized window with maximum total significance (integral-image
// scan over every position); ties pick the smallest y, then x.
CropWindow crop_window(const ScalarField& sig, int target_w, int target_h);

Raster crop(const Raster& r, const CropWindow& w);
ScalarField crop(const ScalarField& f, const CropWindow& w);
LabelMap crop(const LabelMap& m, const CropWindow& w);

struct MultiOpParams {
    int batch = 5;       // pixels changed per greedy step
    int patch = 8;       // similarity patch size
    int stride = 4;      // candidate patch grid stride
    int search_radius = 6;
    int search_step = 1; // every offset: seam/crop alignments are integral
};

// Greedy multi-operator plan: per batch of `batch` pixels along one axis,
// evaluates {seam removals, homogeneous scale, crop} candidates and keeps
// the one whose significance-weighted patch similarity to the current image
// is highest (ties prefer seam, then scale, then crop). The axis with the
// larger relative change is processed first. Enlargement uses seam
// insertion and up-scaling, never cropping.
//
// The similarity runs in both directions. Candidate patches scoring against
// the source measures distortion; source patches scoring against the
// candidate measures retained content. A crop is a verbatim subset of the
// current image, so without the second direction it would always score a
// perfect 0 and the greedy loop would degenerate to pure cropping.
OperationLog plan_multiop(const Raster& smoothed, const ScalarField& significance, int target_w,
                          int target_h, const MultiOpParams& params = {});

// Applies a recorded log to a same-sized image (normally the unsmoothed
// original). Byte-identical to the planner's own output when replayed on
// the planner's input.
Raster replay_log(const Raster& original, const OperationLog& log);

// Transports region labels through the log: seams delete label pixels,
// scaling resamples nearest-neighbor, cropping slices.
RegionPartition map_partition(const RegionPartition& partition, const OperationLog& log);

// Exposed for the planner and tests.
double patch_similarity_score(const Raster& candidate, const ScalarField& candidate_sig,
                              const Raster& source, const ScalarField& source_sig,
                              const MultiOpParams& params);

} // namespace retex

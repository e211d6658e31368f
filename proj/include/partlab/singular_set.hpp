// Interface extraction and singular-point detection for segregated fields:
// cells straddling two or more supports, junction candidates where three or
// more supports meet, vanishing-order estimates from small-radius frequency
// probes, and the wall/junction classification built on the order gap.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "partlab/field_core.hpp"
#include "partlab/frequency.hpp"
#include "partlab/geometry.hpp"

namespace partlab {

enum class PointClass { Wall, Junction };

struct InterfaceCell {
  std::array<int, 3> cell{0, 0, 0};  // lower-corner node indices
  Vec center{0.0, 0.0, 0.0};
  std::vector<int> labels;  // distinct nonzero corner labels, ascending
  bool has_unlabeled = false;  // some corner carried no positive component
};

struct SingularSample {
  Vec location{0.0, 0.0, 0.0};
  PointClass classification = PointClass::Wall;
  double order = 0.0;            // estimated vanishing order at 0+
  std::vector<int> labels;       // component indices present in the detection ball
  double detection_radius = 0.0;
  bool order_signal = false;     // order >= junction threshold
  bool label_signal = false;     // >= 3 labels in the detection ball
  bool order_flagged = false;    // probes degenerate (height vanished)
};

// Cells whose corner nodes carry at least two distinct positive-component
// labels. Label 0 (no positive component) never counts toward the pair.
std::vector<InterfaceCell> extract_interface(const SegregatedField& u);

// Distinct labels of nodes whose support reaches within radius r of x.
std::vector<int> labels_near(const SegregatedField& u, const Vec& x, double r);

// Representatives of clusters of interface cells whose r-neighborhood sees
// three or more labels. Clusters are greedy balls of radius 3h so elongated
// candidate sets (a 3D spine) keep one representative per 3h of length;
// each representative is the label-count weighted centroid of its cluster.
std::vector<Vec> junction_candidates(const SegregatedField& u, double r);

// Minimizes the interpolated |u|^2 over a sub-grid around x; used to snap a
// cell-accurate candidate onto the zero set before small-radius probing.
Vec snap_to_zero(const SegregatedField& u, const Vec& x, double search_radius);

// Estimated vanishing order: exp(lambda_hat r^2) I(x, r) at r in {4h, 6h, 8h},
// extrapolated linearly in r^2 to r = 0. Requires margin >= 16h from the
// boundary. lambda_hat < 0 means calibrate it here from a radius sweep at x.
// Returns NaN when the height vanished at every probe radius.
double vanishing_order(const FrequencyAnalyzer& an, const Vec& x, double lambda_hat = -1.0);
double vanishing_order(const SegregatedField& u, const Vec& x, double lambda_hat = -1.0);

// threshold 1 + delta_n / 2 with delta = 1/2 in dimensions 2 and 3
double junction_order_threshold(int dim);

// Junction when the estimated order clears the threshold or three labels
// appear within the detection radius (8h); both signals are recorded.
SingularSample classify_point(const FrequencyAnalyzer& an, const Vec& x,
                              double lambda_hat = -1.0);
SingularSample classify_point(const SegregatedField& u, const Vec& x,
                              double lambda_hat = -1.0);

struct ClearingReport {
  double iphi = 0.0;
  double eps = 0.0;
  bool triggered = false;         // iphi < eps, so the clearing claim applies
  bool interface_clear = false;   // no interface cell meets B_{r/16}(x)
  bool holds = false;             // triggered implies clear
  double nearest_interface_dist = -1.0;  // to the nearest interface cell box
};

// Low frequency at scale r should force the zero set out of B_{r/16}(x).
ClearingReport clearing_check(const SegregatedField& u, const Vec& x, double r, double eps);

const char* point_class_name(PointClass c);

}  // namespace partlab

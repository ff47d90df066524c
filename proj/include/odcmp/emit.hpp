#pragma once

#include <string>

#include "odcmp/compare.hpp"

namespace odcmp {

// Square count matrix with the "U" margins: extra right column of row sums,
// bottom row of column sums, corner grand total.
void write_od_matrix_csv(const std::string& path, const ClusterODMatrix& m);

// RF matrix with marginal shares in the U layer (margins / grand total).
void write_rf_matrix_csv(const std::string& path, const RFMatrix& rf, const ClusterODMatrix& m);

// Ratio matrices (RFR and LRFR) rendered with the U presentation layer:
// marginal-RF ratios fill the U row/column. Undefined cells are empty fields;
// the sidecar flag file lists them with reasons.
void write_rfr_csv(const std::string& path, const std::string& flags_path, const RatioMatrix& ratio,
                   const ClusterODMatrix& a, const ClusterODMatrix& b);
void write_lrfr_csv(const std::string& path, const std::string& flags_path, const LrfrMatrix& lr,
                    const ClusterODMatrix& a, const ClusterODMatrix& b);

// CSV `source,target,value` for nonzero cells, sorted by (source,target)
// label index; the data layer behind a chord diagram.
void write_chord_edges_csv(const std::string& path, const ClusterODMatrix& m);

void write_normalized_csv(const std::string& path, const NormalizedVectors& v);
void write_sampling_rates_csv(const std::string& path, const SamplingRateTable& t);

// Deterministic grid SVG with a diverging scale centered at 0 (red = dataset
// A over-represented, blue = dataset B), hatched undefined cells, numeric
// value in each cell. Includes the U marginal layer.
void write_lrfr_heatmap_svg(const std::string& path, const LrfrMatrix& lr,
                            const ClusterODMatrix& a, const ClusterODMatrix& b);

}  // namespace odcmp

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pkd {

enum class GoNamespace { Process, Function };

std::string to_string(GoNamespace ns);
GoNamespace parse_go_namespace(const std::string& text);

struct GoAnnotation {
  std::string term_id;
  std::string term_name;
  GoNamespace name_space = GoNamespace::Process;
  std::set<std::string> genes;
};

struct EnrichmentRecord {
  std::string term_id;
  std::string term_name;
  GoNamespace name_space = GoNamespace::Process;
  std::int64_t k = 0;        // annotated genes in the target set
  std::int64_t n = 0;        // target size
  std::int64_t K = 0;        // annotated genes in the background
  std::int64_t N = 0;        // background size
  double p_value = 1.0;
  double q_value = 1.0;
};

// P(X >= k) for X ~ Hypergeometric(population N, K successes, n draws).
double hypergeom_tail(std::int64_t k, std::int64_t K, std::int64_t n, std::int64_t N);

// Benjamini-Hochberg step-up adjusted q-values, in input order.
std::vector<double> bh_adjust(const std::vector<double>& p_values);

// Two-list enrichment of `target` against `background`. Terms with no
// annotated background genes are skipped and do not count toward BH's m.
// Sorted by p ascending, ties by term id.
std::vector<EnrichmentRecord> enrich(const std::set<std::string>& target, const std::set<std::string>& background,
                                     const std::vector<GoAnnotation>& annotations,
                                     std::optional<GoNamespace> name_space = std::nullopt);

// Tab-separated, header row, columns term_id, term_name, namespace, gene_id;
// one gene per line. Lines of the same term are merged.
std::vector<GoAnnotation> read_annotations(std::istream& in);
std::vector<GoAnnotation> load_annotations(const std::filesystem::path& path);

// One id per line; blank lines ignored.
std::set<std::string> load_gene_set(const std::filesystem::path& path);

void write_enrichment_csv(std::ostream& out, const std::vector<EnrichmentRecord>& records);

}  // namespace pkd

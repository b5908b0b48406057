#include "pkd/analysis/enrichment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "pkd/error.hpp"

namespace pkd {
namespace {

double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string strip(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

std::string to_string(GoNamespace ns) { return ns == GoNamespace::Process ? "process" : "function"; }

GoNamespace parse_go_namespace(const std::string& text) {
  const std::string value = lower(strip(text));
  if (value == "process") return GoNamespace::Process;
  if (value == "function") return GoNamespace::Function;
  throw Error(Errc::ParseError, "namespace must be 'process' or 'function', got '" + text + "'");
}

double hypergeom_tail(std::int64_t k, std::int64_t K, std::int64_t n, std::int64_t N) {
  if (N < 0 || K < 0 || n < 0 || k < 0 || K > N || n > N || k > std::min(K, n)) {
    throw Error(Errc::InvalidCounts, "need 0 <= k <= min(K, n), K <= N, n <= N; got k=" + std::to_string(k) +
                                         " K=" + std::to_string(K) + " n=" + std::to_string(n) +
                                         " N=" + std::to_string(N));
  }
  const std::int64_t lowest = std::max<std::int64_t>(0, n + K - N);
  const std::int64_t highest = std::min(K, n);
  if (k <= lowest) return 1.0;

  // First term in log space, the rest by the ratio of consecutive probabilities.
  double term = std::exp(log_choose(K, k) + log_choose(N - K, n - k) - log_choose(N, n));
  double total = 0.0;
  for (std::int64_t x = k; x <= highest; ++x) {
    total += term;
    term *= static_cast<double>((K - x) * (n - x)) / static_cast<double>((x + 1) * (N - K - n + x + 1));
  }
  return std::min(total, 1.0);
}

std::vector<double> bh_adjust(const std::vector<double>& p_values) {
  const std::size_t m = p_values.size();
  for (double p : p_values) {
    if (!(p > 0.0 && p <= 1.0)) throw Error(Errc::InvalidP, "p-values must lie in (0, 1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

  std::vector<double> q(m);
  double running = 1.0;
  for (std::size_t rank = m; rank-- > 0;) {
    const double scaled = p_values[order[rank]] * static_cast<double>(m) / static_cast<double>(rank + 1);
    running = std::min(running, scaled);
    q[order[rank]] = running;
  }
  return q;
}

std::vector<EnrichmentRecord> enrich(const std::set<std::string>& target, const std::set<std::string>& background,
                                     const std::vector<GoAnnotation>& annotations,
                                     std::optional<GoNamespace> name_space) {
  if (target.empty() || background.empty()) throw Error(Errc::EmptySet, "target and background must be non-empty");
  for (const auto& gene : target) {
    if (!background.count(gene)) throw Error(Errc::TargetNotSubset, "target gene '" + gene + "' is not in the background");
  }
  const auto n = static_cast<std::int64_t>(target.size());
  const auto N = static_cast<std::int64_t>(background.size());

  std::vector<EnrichmentRecord> records;
  for (const auto& term : annotations) {
    if (name_space && term.name_space != *name_space) continue;
    std::int64_t K = 0;
    std::int64_t k = 0;
    for (const auto& gene : term.genes) {
      if (background.count(gene)) ++K;
      if (target.count(gene)) ++k;
    }
    if (K == 0) continue;
    records.push_back({term.term_id, term.term_name, term.name_space, k, n, K, N, hypergeom_tail(k, K, n, N), 1.0});
  }

  std::vector<double> p(records.size());
  std::transform(records.begin(), records.end(), p.begin(), [](const auto& r) { return r.p_value; });
  const std::vector<double> q = bh_adjust(p);
  for (std::size_t i = 0; i < records.size(); ++i) records[i].q_value = q[i];

  std::sort(records.begin(), records.end(), [](const EnrichmentRecord& a, const EnrichmentRecord& b) {
    if (a.p_value != b.p_value) return a.p_value < b.p_value;
    return a.term_id < b.term_id;
  });
  return records;
}

std::vector<GoAnnotation> read_annotations(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::ParseError, "annotation file has no header");
  std::vector<GoAnnotation> terms;
  std::map<std::string, std::size_t> index;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (strip(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) cells.push_back(strip(cell));
    if (cells.size() < 4 || cells[0].empty()) {
      throw Error(Errc::ParseError, "annotation line " + std::to_string(line_number) +
                                        ": expected term_id, term_name, namespace, gene_id");
    }
    const GoNamespace ns = parse_go_namespace(cells[2]);
    auto [it, inserted] = index.emplace(cells[0], terms.size());
    if (inserted) terms.push_back({cells[0], cells[1], ns, {}});
    GoAnnotation& term = terms[it->second];
    if (term.name_space != ns) {
      throw Error(Errc::ParseError, "term " + cells[0] + " appears under two namespaces");
    }
    if (!cells[3].empty()) term.genes.insert(cells[3]);
  }
  return terms;
}

std::vector<GoAnnotation> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open annotation file " + path.string());
  return read_annotations(in);
}

std::set<std::string> load_gene_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open gene list " + path.string());
  std::set<std::string> genes;
  std::string line;
  while (std::getline(in, line)) {
    const std::string gene = strip(line);
    if (!gene.empty()) genes.insert(gene);
  }
  return genes;
}

void write_enrichment_csv(std::ostream& out, const std::vector<EnrichmentRecord>& records) {
  out << "term_id,term_name,namespace,k,K,n,N,p_value,q_value\n";
  out << std::setprecision(17);
  for (const auto& r : records) {
    out << csv_field(r.term_id) << ',' << csv_field(r.term_name) << ',' << to_string(r.name_space) << ',' << r.k
        << ',' << r.K << ',' << r.n << ',' << r.N << ',' << r.p_value << ',' << r.q_value << '\n';
  }
}

}  // namespace pkd

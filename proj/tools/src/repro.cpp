#include "repro.hpp"

#include <cmath>
#include <sstream>

#include "reference.hpp"
#include "sticky/channel.hpp"
#include "sticky/format.hpp"
#include "sticky/infotheory.hpp"

namespace sticky::cli {

namespace {

template <class Table>
ReproItem compare_table(std::string name, const ChannelMatrix& ch, const Table& expected,
                        double tol) {
  const auto table = kl_table(ch, IndexRange{1, 5}, IndexRange{1, 7});
  ReproItem item{std::move(name), true, {}};
  std::ostringstream detail;
  double worst = 0.0;
  for (std::size_t k = 1; k <= 5; ++k) {
    for (std::size_t k2 = 1; k2 <= 7; ++k2) {
      const double want = expected[k - 1][k2 - 1];
      const double got = table.at(k, k2);
      if (std::isinf(want) || std::isinf(got)) {
        if (std::isinf(want) != std::isinf(got)) {
          item.pass = false;
          detail << " d" << k << k2 << "=" << format_number(got) << " (want "
                 << format_number(want) << ")";
        }
        continue;
      }
      const double err = std::abs(got - want);
      worst = std::max(worst, err);
      if (err > tol) {
        item.pass = false;
        detail << " d" << k << k2 << "=" << format_number(got) << " (want "
               << format_number(want) << ")";
      }
    }
  }
  item.detail = "max |error| " + format_number(worst) + " tol " + format_number(tol) +
                (item.pass ? "" : ";" + detail.str());
  return item;
}

ReproItem replica_claim(std::string name, const ChannelMatrix& ch, std::size_t bound) {
  const auto model = SourceModel::uniform("01");
  ReproItem item{std::move(name), false, {}};
  try {
    const auto req = required_replicas(model, ch, reference::kReplicaN, 1.0);
    item.pass = req.replicas < bound;
    item.detail = "c = " + std::to_string(req.replicas) + " (want < " + std::to_string(bound) +
                  "), entropy " + format_number(req.entropy) + " nats";
  } catch (const std::exception& e) {
    item.detail = e.what();
  }
  return item;
}

}  // namespace

std::vector<ReproItem> run_repro() {
  std::vector<ReproItem> items;
  const auto exponential = build_exponential(reference::kExponentialQ);
  auto t1 = compare_table("exponential-divergences", exponential, reference::kExponentialTable,
                          reference::kExponentialTolerance);
  const auto window = kl_table(exponential, IndexRange{1, 5}, IndexRange{1, 7});
  if (!window.d_min || window.d_min->row != 2 || window.d_min->col != 1) {
    t1.pass = false;
    t1.detail += "; d21 is not the window minimum";
  }
  items.push_back(std::move(t1));
  items.push_back(compare_table("indel-divergences", build_independent_indel(reference::kIndelEps),
                                reference::kIndelTable, reference::kIndelTolerance));
  items.push_back(replica_claim("exponential-replicas", exponential,
                                reference::kExponentialReplicaBound));
  items.push_back(replica_claim("indel-replicas",
                                build_independent_indel(reference::kReplicaIndelEps),
                                reference::kIndelReplicaBound));
  return items;
}

}  // namespace sticky::cli

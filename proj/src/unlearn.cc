#include "unrank/unlearn.h"

#include <sstream>

#include "unrank/io.h"

namespace unrank {

std::vector<double> UnlearnResult::EpochSeconds() const {
  std::vector<double> out;
  for (const auto& e : log) out.push_back(e.wall_seconds);
  return out;
}

std::string UnlearnLogCsv(std::string_view method,
                          const UnlearnResult& result) {
  std::ostringstream out;
  out << "# method=" << method << "\n";
  out << "epoch,fc_loss,retain_loss,wall_seconds\n";
  for (const auto& e : result.log) {
    out << e.epoch << ',' << FormatDouble(e.fc_loss) << ','
        << FormatDouble(e.retain_loss) << ',' << FormatDouble(e.wall_seconds)
        << '\n';
  }
  return out.str();
}

}  // namespace unrank

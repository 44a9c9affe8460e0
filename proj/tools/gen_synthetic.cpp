// Writes a synthetic dataset in the Date,Close,<features> layout.
#include <CLI11.hpp>
#include <iostream>

#include "samba/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate a synthetic feature table"};
  std::string kind = "signal", out;
  std::size_t days = 600, features = 10;
  std::uint64_t seed = 7;
  app.add_option("--kind", kind, "signal | market")->check(CLI::IsMember({"signal", "market"}));
  app.add_option("--days", days);
  app.add_option("--features", features, "feature count (market defaults to 82)");
  app.add_option("--seed", seed);
  app.add_option("--out", out)->required();
  CLI11_PARSE(app, argc, argv);

  const auto frame = kind == "signal" ? samba::make_signal_frame(days, features, seed)
                                      : samba::make_market_frame(days, seed, app.count("--features") ? features : 82);
  samba::write_feature_csv(out, frame);
  std::cout << "wrote " << frame.days() << " days x " << frame.num_features() << " features to " << out << "\n";
  return 0;
}

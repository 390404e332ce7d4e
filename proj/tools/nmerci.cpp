// Command-line front end.
//
//   nmerci eval --input FILE [--alpha 95] [--trim-mae true] [--bin-width W]
//               [--format csv|json] --out DIR
//   nmerci toy  [--methods mi,bagging,mcd,me] [--runs 20] [--seed 0]
//               [--alphas 5,10,...,100] --out DIR
//
// Exit codes: 0 success (degenerate metrics included), 1 data error,
// 2 usage error.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nmerci/commands.hpp"

namespace {

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw nmerci::UsageError("expected a boolean, got '" + s + "'");
}

std::vector<double> parse_alphas(const std::string& list) {
  std::vector<double> alphas;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const auto item = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != item.size()) throw nmerci::UsageError("bad alpha '" + item + "'");
      nmerci::MetricConfig{v, false}.validate();
      alphas.push_back(v);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (alphas.empty()) throw nmerci::UsageError("no alphas given");
  return alphas;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"n-MeRCI evaluation of predictive uncertainty for regression"};
  app.set_version_flag("--version", std::string(nmerci::kVersion));
  app.require_subcommand(1);

  std::string input;
  double alpha = 95.0;
  std::string trim_mae = "true";
  double bin_width = 0.0;
  std::string format = "csv";
  std::string eval_out;
  auto* eval = app.add_subcommand("eval", "score a triplet file (y_hat,sigma,y_true)");
  eval->add_option("--input", input, "CSV or JSONL triplet file")->required();
  eval->add_option("--alpha", alpha, "inlier percentile in (0, 100]")->capture_default_str();
  eval->add_option("--trim-mae", trim_mae, "normalize with the MAE of inliers only")->capture_default_str();
  auto* bin_opt = eval->add_option("--bin-width", bin_width, "also score bins of ground truth of this width");
  eval->add_option("--format", format, "report format: csv or json")->capture_default_str();
  eval->add_option("--out", eval_out, "output directory")->required();

  std::string methods = "mi,bagging,mcd,me";
  std::size_t runs = 20;
  std::uint64_t seed = 0;
  std::string alphas = "5,10,15,20,25,30,35,40,45,50,55,60,65,70,75,80,85,90,95,100";
  std::string toy_out;
  auto* toy = app.add_subcommand("toy", "run the cubic toy benchmark and the alpha sweep");
  toy->add_option("--methods", methods, "comma list of mi,bagging,mcd,me,mn,le,oracle,constant")
      ->capture_default_str();
  toy->add_option("--runs", runs, "independent runs per method")->capture_default_str();
  toy->add_option("--seed", seed, "master seed")->capture_default_str();
  toy->add_option("--alphas", alphas, "comma list of percentiles")->capture_default_str();
  toy->add_option("--out", toy_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*eval) {
      nmerci::EvalOptions opt;
      opt.input = input;
      opt.metric = {alpha, parse_bool(trim_mae)};
      if (bin_opt->count() > 0) opt.bin_width = bin_width;
      opt.format = nmerci::parse_report_format(format);
      opt.out_dir = eval_out;
      const auto result = nmerci::cmd_eval(opt);
      std::cout << "rows " << result.samples.size() << "  n-MeRCI "
                << (result.report.n_merci ? nmerci::io::format_real(*result.report.n_merci)
                                          : std::string("degenerate"))
                << "  MAE " << nmerci::io::format_real(result.report.mae) << '\n';
    } else if (*toy) {
      nmerci::ToyOptions opt;
      opt.methods = nmerci::parse_method_list(methods);
      opt.config.n_runs = runs;
      opt.config.master_seed = seed;
      opt.config.alphas = parse_alphas(alphas);
      opt.out_dir = toy_out;
      const auto outcome = nmerci::cmd_toy(opt);
      for (const auto& r : outcome.results) {
        const auto it = r.n_merci_by_alpha.find(85.0);
        std::cout << nmerci::toy::display_name(r.method);
        if (it != r.n_merci_by_alpha.end()) {
          std::cout << "  n-MeRCI@85 "
                    << (it->second.n_merci ? nmerci::io::format_real(*it->second.n_merci)
                                           : std::string("degenerate"));
        }
        std::cout << '\n';
      }
    }
  } catch (const nmerci::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

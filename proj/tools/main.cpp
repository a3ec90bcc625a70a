#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "smoments/experiment.hpp"
#include "smoments/stream_io.hpp"

using namespace smoments;

namespace {

struct CommonArgs {
  double p = 1.0;
  double eps = 0.25;
  double delta = 0.1;
  std::uint64_t n = 1 << 10;
  std::uint64_t m = 100000;
  std::string gen = "zipf";
  double skew = 1.0;
  std::uint64_t heavy_count = 1, heavy_freq = 1000;
  std::string input;
  std::uint64_t seed = 1;
  std::uint32_t trials = 1;
  std::uint32_t copies = 0;
  std::string csv_out;
  double min_success_rate = -1.0;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_p) {
  if (with_p) cmd->add_option("--p", a.p, "moment exponent in (0,2)");
  cmd->add_option("--epsilon", a.eps, "target relative accuracy");
  cmd->add_option("--delta", a.delta, "failure probability");
  cmd->add_option("--n", a.n, "universe size");
  cmd->add_option("--m", a.m, "stream length for generated input");
  cmd->add_option("--gen", a.gen, "generator: uniform | zipf | planted");
  cmd->add_option("--skew", a.skew, "zipf skew");
  cmd->add_option("--heavy-count", a.heavy_count, "planted heavy items");
  cmd->add_option("--heavy-freq", a.heavy_freq, "planted heavy frequency");
  cmd->add_option("--input", a.input, "stream file (binary RSTRM1 or text)");
  cmd->add_option("--seed", a.seed, "base seed; trial t uses seed+t");
  cmd->add_option("--trials", a.trials, "number of seeded shuffles");
  cmd->add_option("--copies", a.copies, "parallel estimator copies (fprand)");
  cmd->add_option("--csv-out", a.csv_out, "write per-trial CSV here");
  cmd->add_option("--min-success-rate", a.min_success_rate,
                  "exit 2 when the success rate falls below this");
}

GeneratorSpec generator_of(const CommonArgs& a) {
  GeneratorSpec g;
  g.n = a.n;
  g.m = a.m;
  g.seed = a.seed;
  g.skew = a.skew;
  if (a.gen == "uniform") {
    g.kind = GeneratorSpec::Kind::Uniform;
  } else if (a.gen == "zipf") {
    g.kind = GeneratorSpec::Kind::Zipf;
  } else if (a.gen == "planted") {
    g.kind = GeneratorSpec::Kind::PlantedHeavy;
    g.heavy_count = a.heavy_count;
    g.heavy_freq = a.heavy_freq;
    g.background = a.m - a.heavy_count * a.heavy_freq;
  } else {
    throw CLI::ValidationError("--gen must be uniform, zipf or planted");
  }
  return g;
}

int run(Algorithm algo, const CommonArgs& a) {
  ExperimentSpec spec;
  spec.algo = algo;
  spec.p = algo == Algorithm::F2Rand ? 2.0 : a.p;
  spec.eps = a.eps;
  spec.delta = a.delta;
  spec.trials = a.trials;
  spec.base_seed = a.seed;
  spec.copies = a.copies;
  spec.input_path = a.input;
  if (a.input.empty()) spec.gen = generator_of(a);
  spec.pipeline = ExperimentSpec::calibrated_pipeline(spec.p, a.eps);
  spec.derand.extract_fraction = 0.25;
  spec.derand.pipeline = spec.pipeline;

  ExperimentResult result = run_experiment(spec);
  std::string csv = to_csv(spec, result);
  if (a.csv_out.empty())
    std::cout << csv;
  else
    write_csv(a.csv_out, csv);

  auto w = result.interval();
  std::fprintf(stderr, "%s: %zu/%zu trials within %.4g (rate %.3f, wilson [%.3f, %.3f])\n",
               algorithm_name(algo), result.successes(), result.rows.size(),
               result.tolerance, w.rate, w.low, w.high);
  if (a.min_success_rate >= 0.0 && w.rate < a.min_success_rate) return 2;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frequency moment estimators for random order streams"};
  app.require_subcommand(1);

  CommonArgs f2, fp, det, oracle, genargs, audit;

  auto* cmd_f2 = app.add_subcommand("f2rand", "block-pair F2 estimator");
  add_common(cmd_f2, f2, false);

  auto* cmd_fp = app.add_subcommand("fprand", "random-order F_p pipeline");
  add_common(cmd_fp, fp, true);

  auto* cmd_det = app.add_subcommand("fpdet", "deterministic F_p estimator");
  add_common(cmd_det, det, true);

  auto* cmd_oracle = app.add_subcommand("oracle", "exact brute-force moment");
  add_common(cmd_oracle, oracle, true);

  auto* cmd_gen = app.add_subcommand("gen", "write a generated stream to a file");
  add_common(cmd_gen, genargs, false);
  std::string gen_out = "stream.rstrm";
  std::string gen_format = "binary";
  cmd_gen->add_option("--out", gen_out, "output path");
  cmd_gen->add_option("--format", gen_format, "binary | text");

  auto* cmd_audit = app.add_subcommand("audit-space", "peak bits across an eps grid");
  add_common(cmd_audit, audit, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_f2->parsed()) return run(Algorithm::F2Rand, f2);
    if (cmd_fp->parsed()) return run(Algorithm::FpRand, fp);
    if (cmd_det->parsed()) return run(Algorithm::FpDet, det);
    if (cmd_oracle->parsed()) return run(Algorithm::Oracle, oracle);
    if (cmd_gen->parsed()) {
      Stream s = generate(generator_of(genargs));
      if (gen_format == "text")
        write_stream_text(s, gen_out);
      else
        write_stream_binary(s, gen_out);
      std::fprintf(stderr, "wrote %zu updates (universe %llu) to %s\n",
                   s.updates.size(),
                   static_cast<unsigned long long>(s.universe), gen_out.c_str());
      return 0;
    }
    if (cmd_audit->parsed()) {
      Stream base = audit.input.empty() ? generate(generator_of(audit))
                                        : read_stream(audit.input);
      SpaceAudit a = audit_space(audit.p, base, audit.delta,
                                 {0.4, 0.2, 0.1, 0.05}, audit.seed);
      std::cout << "eps,peak_bits\n";
      for (const auto& row : a.rows)
        std::cout << row.eps << ',' << row.peak_bits << "\n";
      std::cout << "fitted_exponent," << a.fitted_exponent << "\n";
      std::cout << "naive_bits," << a.naive_bits << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

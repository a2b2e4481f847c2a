// Command-line front end: build, validate, eval, sample, train, gen-dataset,
// enumerate. Exit codes: 0 success, 1 failed validation or runtime error,
// 2 usage error. Every command that writes a file also writes
// <out>.manifest.json with hashes, seed, and the RNG name, so runs can be
// reproduced bit-for-bit in single-threaded mode.

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spqn/spqn.hpp"

namespace {

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::uint64_t default_seed() {
  const char* env = std::getenv("SPQN_SEED");
  if (!env || !*env) return 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0')
    throw spqn::InputError(std::string("SPQN_SEED is not an integer: ") + env);
  return v;
}

std::string join_argv(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::int64_t ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start)
        .count();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sum-product-quotient network toolkit"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads (1 = fully deterministic)")
      ->capture_default_str();

  std::string arch, spec_path, out_path, model_path, data_path, valid_path, cond_path;
  std::uint32_t tf_m = 3;
  std::uint64_t seed = 0;
  bool seed_given = false;
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "rng seed (default: $SPQN_SEED or 0)")
        ->each([&](const std::string&) { seed_given = true; });
  };

  CLI::App* build = app.add_subcommand("build", "construct a model and write a model file");
  build->add_option("--arch", arch, "conv | trianglefree | baseline")->required();
  build->add_option("--spec", spec_path, "conv architecture spec (JSON)");
  build->add_option("--M", tf_m, "vertex count for trianglefree");
  build->add_option("--out", out_path, "output model file")->required();
  add_seed(build);

  std::string profile = "all";
  std::uint32_t bound = spqn::default_enumeration_bound;
  CLI::App* validate = app.add_subcommand("validate", "run a validation profile on a model");
  validate->add_option("--model", model_path, "model file")->required();
  validate->add_option("--profile", profile, "dnc-spn | valid-cmo | soundness-bruteforce | all")
      ->capture_default_str();
  validate->add_option("--bound", bound, "max variables for brute-force enumeration")
      ->capture_default_str();

  CLI::App* eval = app.add_subcommand("eval", "log-likelihood of each sample in a dataset");
  eval->add_option("--model", model_path, "model file")->required();
  eval->add_option("--data", data_path, "dataset file")->required();

  std::size_t count = 1;
  CLI::App* sample = app.add_subcommand("sample", "draw samples and write a dataset file");
  sample->add_option("--model", model_path, "model file")->required();
  sample->add_option("--count", count, "number of samples")->required();
  sample->add_option("--condition", cond_path, "dataset file with one partial assignment");
  sample->add_option("--out", out_path, "output dataset file")->required();
  add_seed(sample);

  spqn::TrainConfig cfg;
  CLI::App* train = app.add_subcommand("train", "maximum-likelihood training");
  train->add_option("--model", model_path, "input model file")->required();
  train->add_option("--data", data_path, "training dataset")->required();
  train->add_option("--valid", valid_path, "validation dataset")->required();
  train->add_option("--out", out_path, "output model file")->required();
  train->add_option("--lr", cfg.learning_rate)->capture_default_str();
  train->add_option("--beta1", cfg.beta1)->capture_default_str();
  train->add_option("--beta2", cfg.beta2)->capture_default_str();
  train->add_option("--batch", cfg.batch_size)->capture_default_str();
  train->add_option("--epochs", cfg.epochs)->capture_default_str();
  add_seed(train);

  std::uint32_t width = 0, height = 0;
  CLI::App* gen = app.add_subcommand("gen-dataset", "generate grid path samples");
  gen->add_option("--width", width)->required();
  gen->add_option("--height", height)->required();
  gen->add_option("--count", count, "number of samples")->required();
  gen->add_option("--out", out_path, "output dataset file")->required();
  add_seed(gen);

  CLI::App* enumerate =
      app.add_subcommand("enumerate", "exact probability of every assignment");
  enumerate->add_option("--model", model_path, "model file")->required();
  enumerate->add_option("--bound", bound, "max variables to enumerate")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  Stopwatch clock;
  try {
    if (!seed_given) seed = default_seed();

    if (build->parsed()) {
      spqn::Model model = [&] {
        if (arch == "trianglefree") return spqn::build_trianglefree_spqn(tf_m);
        if (arch != "conv" && arch != "baseline")
          throw spqn::InputError("unknown --arch " + arch +
                                 " (expected conv, trianglefree, or baseline)");
        if (spec_path.empty()) throw spqn::InputError("--arch " + arch + " requires --spec");
        spqn::ConvNetSpec spec = spqn::load_conv_spec(spec_path);
        return arch == "conv" ? spqn::build_conv_spqn(spec, seed)
                              : spqn::build_baseline_spn(spec, seed);
      }();
      spqn::save_model(out_path, model);
      spqn::RunManifest man;
      man.command = join_argv(argc, argv);
      man.seed = seed;
      man.threads = threads;
      if (!spec_path.empty()) man.add_input(spec_path);
      man.add_output(out_path);
      man.wall_ms = clock.ms();
      man.write(out_path + ".manifest.json");
      std::printf("wrote %s: %zu nodes, %zu parameters\n", out_path.c_str(),
                  model.net.size(), model.params.dim());
      return 0;
    }

    if (validate->parsed()) {
      spqn::Model model = spqn::load_model(model_path);
      spqn::ScopeTable scopes = spqn::compute_scopes(model.net);
      spqn::ValidationReport rep =
          spqn::run_profile(model.net, model.params, scopes, profile, model.cmos, bound);
      std::fputs(rep.to_text().c_str(), stdout);
      return rep.passed() ? 0 : 1;
    }

    if (eval->parsed()) {
      spqn::Model model = spqn::load_model(model_path);
      std::vector<spqn::Evidence> data = spqn::read_dataset(data_path);
      spqn::ScopeTable scopes = spqn::compute_scopes(model.net);
      spqn::EvalOptions opts{&scopes, false};
      spqn::EvalContext ctx(model.net, model.params);
      double sum = 0.0;
      bool any_zero = false;
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i].has_star()) spqn::detail::admit_star_pattern(model.net, data[i], opts);
        double ll = ctx.run(data[i]);
        if (ll == spqn::neg_inf) any_zero = true;
        sum += ll;
        std::printf("%zu\t%s\n", i, fmt17(ll).c_str());
      }
      if (data.empty()) throw spqn::InputError("dataset " + data_path + " has no samples");
      double mean = any_zero ? spqn::neg_inf : sum / static_cast<double>(data.size());
      std::printf("mean=%s\n", fmt17(mean).c_str());
      return 0;
    }

    if (sample->parsed()) {
      spqn::Model model = spqn::load_model(model_path);
      spqn::ScopeTable scopes = spqn::compute_scopes(model.net);
      spqn::Evidence partial(model.net.num_vars());
      if (!cond_path.empty()) {
        std::uint32_t n = 0;
        std::vector<spqn::Evidence> cond = spqn::read_dataset(cond_path, &n);
        if (cond.size() != 1)
          throw spqn::InputError("--condition file must contain exactly one assignment, got " +
                                 std::to_string(cond.size()));
        if (n != model.net.num_vars())
          throw spqn::InputError("--condition has " + std::to_string(n) +
                                 " variables, model has " +
                                 std::to_string(model.net.num_vars()));
        partial = cond[0];
      }
      spqn::Sampler sampler(model.net, model.params, scopes);
      std::vector<spqn::Evidence> out = sampler.sample_batch(partial, count, seed, threads);
      spqn::write_dataset(out_path, out, model.net.num_vars());
      spqn::RunManifest man;
      man.command = join_argv(argc, argv);
      man.seed = seed;
      man.threads = threads;
      man.add_input(model_path);
      if (!cond_path.empty()) man.add_input(cond_path);
      man.add_output(out_path);
      man.wall_ms = clock.ms();
      man.write(out_path + ".manifest.json");
      std::printf("wrote %s: %zu samples\n", out_path.c_str(), out.size());
      return 0;
    }

    if (train->parsed()) {
      spqn::Model model = spqn::load_model(model_path);
      std::vector<spqn::Evidence> train_set = spqn::read_dataset(data_path);
      std::vector<spqn::Evidence> valid_set = spqn::read_dataset(valid_path);
      cfg.seed = seed;
      cfg.threads = threads;
      spqn::train(model.net, model.params, train_set, valid_set, cfg,
                  [](const spqn::EpochStats& s) {
                    std::printf("epoch=%u train_ll=%s valid_ll=%s\n", s.epoch,
                                fmt17(s.train_ll).c_str(), fmt17(s.valid_ll).c_str());
                    std::fflush(stdout);
                  });
      spqn::save_model(out_path, model);
      spqn::RunManifest man;
      man.command = join_argv(argc, argv);
      man.seed = seed;
      man.threads = threads;
      man.add_input(model_path);
      man.add_input(data_path);
      man.add_input(valid_path);
      man.add_output(out_path);
      man.wall_ms = clock.ms();
      man.write(out_path + ".manifest.json");
      return 0;
    }

    if (gen->parsed()) {
      std::vector<spqn::GridSample> grids =
          spqn::generate_path_dataset(width, height, count, seed, threads);
      spqn::write_dataset(out_path, spqn::to_evidence(grids), width * height);
      spqn::RunManifest man;
      man.command = join_argv(argc, argv);
      man.seed = seed;
      man.threads = threads;
      man.add_output(out_path);
      man.wall_ms = clock.ms();
      man.write(out_path + ".manifest.json");
      std::printf("wrote %s: %zu samples\n", out_path.c_str(), grids.size());
      return 0;
    }

    if (enumerate->parsed()) {
      spqn::Model model = spqn::load_model(model_path);
      spqn::ExactDistribution dist =
          spqn::enumerate_distribution(model.net, model.params, bound, threads);
      std::uint32_t n = model.net.num_vars();
      for (std::size_t idx = 0; idx < dist.table().size(); ++idx)
        std::printf("%s\t%s\n", spqn::ExactDistribution::assignment(n, idx).to_string().c_str(),
                    fmt17(dist.table()[idx]).c_str());
      std::printf("total=%s\n", fmt17(dist.total()).c_str());
      return 0;
    }
  } catch (const spqn::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}

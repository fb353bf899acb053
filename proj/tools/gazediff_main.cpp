// gazediff command line: corpus generation, embedder training, diffusion
// training, synthesis, the high-pass baseline, and evaluation protocols.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gazediff/pipeline.hpp"
#include "gazediff/signal.hpp"

namespace {

using namespace gazediff;

uint64_t env_seed_fallback(uint64_t seed, bool seed_given) {
  if (seed_given) return seed;
  const char* env = std::getenv("GAZE_DIFFUSION_SEED");
  if (env) return static_cast<uint64_t>(std::strtoull(env, nullptr, 10));
  return seed;
}

GazeSequence zoh_upsample(const GazeSequence& g, double target_rate) {
  if (g.sample_rate >= target_rate) return g;
  const double ratio = target_rate / g.sample_rate;
  const auto factor = static_cast<std::size_t>(std::llround(ratio));
  require(std::abs(ratio - static_cast<double>(factor)) < 1e-6,
          "upsample: rates not integer-related");
  GazeSequence out;
  out.sample_rate = target_rate;
  out.x.reserve(g.length() * factor);
  for (std::size_t i = 0; i < g.length(); ++i) {
    for (std::size_t k = 0; k < factor; ++k) {
      out.x.push_back(g.x[i]);
      out.y.push_back(g.y[i]);
      out.valid.push_back(g.valid[i]);
    }
  }
  return out;
}

void write_report_rows(
    const std::string& path,
    const std::vector<std::vector<std::string>>& rows,
    const std::string& header) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "cannot open report " + path);
  out << header << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << row[i] << (i + 1 < row.size() ? "," : "");
    out << "\n";
  }
}

std::string fmt(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

// minimal SVG trace plot: velocity magnitude on top, gaze path below
void write_svg(const std::string& path, const VelocitySequence& v,
               const GazeSequence& g) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), "cannot open svg " + path);
  const int w = 800, h = 400;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w
      << "' height='" << h << "'>\n";
  auto polyline = [&](const std::vector<double>& ys, double y0, double y1,
                      int top, int height, const char* color) {
    out << "<polyline fill='none' stroke='" << color << "' points='";
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (!std::isfinite(ys[i])) continue;
      const double px = static_cast<double>(i) / static_cast<double>(ys.size() - 1) * w;
      const double frac = (ys[i] - y0) / (y1 - y0);
      const double py = top + height - frac * height;
      out << px << ',' << py << ' ';
    }
    out << "'/>\n";
  };
  std::vector<double> mag(v.length());
  for (std::size_t i = 0; i < v.length(); ++i)
    mag[i] = std::hypot(v.vx[i], v.vy[i]);
  polyline(mag, 0.0, 1000.0, 0, h / 2 - 10, "#d62728");
  polyline(g.x, -15.0, 15.0, h / 2, h / 2 - 10, "#1f77b4");
  polyline(g.y, -15.0, 15.0, h / 2, h / 2 - 10, "#2ca02c");
  out << "</svg>\n";
}

void apply_config_json(const std::string& path,
                       denoiser::DenoiserConfig& dcfg,
                       training::TrainConfig& tcfg, int& sched_steps,
                       double& beta_start, double& beta_end) {
  std::ifstream in(path);
  require(in.good(), "cannot open config " + path);
  const nlohmann::json j = nlohmann::json::parse(in);
  auto check_keys = [](const nlohmann::json& obj,
                       const std::vector<std::string>& known,
                       const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
      (void)value;
      bool ok = false;
      for (const auto& k : known) ok = ok || k == key;
      require(ok, "config: unknown key '" + key + "' in " + where);
    }
  };
  check_keys(j, {"denoiser", "training", "schedule"}, "root");
  if (j.contains("denoiser")) {
    const auto& d = j["denoiser"];
    check_keys(d,
               {"n_layers", "channels", "dilation_cycle", "sequence_length",
                "embedding_dim", "t_embed_hidden"},
               "denoiser");
    dcfg.n_layers = d.value("n_layers", dcfg.n_layers);
    dcfg.channels = d.value("channels", dcfg.channels);
    dcfg.dilation_cycle = d.value("dilation_cycle", dcfg.dilation_cycle);
    dcfg.sequence_length = d.value("sequence_length", dcfg.sequence_length);
    dcfg.embedding_dim = d.value("embedding_dim", dcfg.embedding_dim);
    dcfg.t_embed_hidden = d.value("t_embed_hidden", dcfg.t_embed_hidden);
  }
  if (j.contains("training")) {
    const auto& t = j["training"];
    check_keys(t,
               {"batch_size", "learning_rate", "cosine_lr_decay", "lambda_id",
                "noise_norm", "raw_lambda_objective", "log_every"},
               "training");
    tcfg.batch_size = t.value("batch_size", tcfg.batch_size);
    tcfg.learning_rate = t.value("learning_rate", tcfg.learning_rate);
    tcfg.cosine_lr_decay = t.value("cosine_lr_decay", tcfg.cosine_lr_decay);
    tcfg.lambda_id = t.value("lambda_id", tcfg.lambda_id);
    tcfg.raw_lambda_objective =
        t.value("raw_lambda_objective", tcfg.raw_lambda_objective);
    tcfg.log_every = t.value("log_every", tcfg.log_every);
    if (t.contains("noise_norm")) {
      const std::string norm = t["noise_norm"];
      require(norm == "l1" || norm == "l2", "config: noise_norm must be l1|l2");
      tcfg.noise_norm =
          norm == "l1" ? training::NoiseNorm::l1 : training::NoiseNorm::l2;
    }
  }
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    check_keys(s, {"steps", "beta_start", "beta_end"}, "schedule");
    sched_steps = s.value("steps", sched_steps);
    beta_start = s.value("beta_start", beta_start);
    beta_end = s.value("beta_end", beta_end);
  }
}

int run(int argc, char** argv) {
  CLI::App app{"user-specific eye-movement synthesis by conditional diffusion"};
  app.require_subcommand(1);
  int threads = 1;
  bool deterministic = false;
  app.add_option("--threads", threads, "worker cap (current build is serial)");
  app.add_flag("--deterministic", deterministic,
               "force sequential reduction order");

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic corpus");
  corpus::CorpusConfig ccfg;
  std::string out_dir;
  bool gen_seed_given = false;
  gen->add_option("--users", ccfg.n_users);
  gen->add_option("--seqs", ccfg.sequences_per_user);
  gen->add_option("--len", ccfg.sequence_length);
  gen->add_option("--rate", ccfg.sample_rate);
  gen->add_option("--workspace", ccfg.workspace_deg);
  gen->add_option("--seed", ccfg.seed)->each([&](const std::string&) {
    gen_seed_given = true;
  });
  gen->add_option("--out", out_dir)->required();

  // train-embedder
  auto* temb = app.add_subcommand("train-embedder",
                                  "train the user-embedding network");
  std::string temb_corpus, temb_out, temb_report;
  int temb_dim = 32, temb_epochs = 30;
  uint64_t temb_seed = 1;
  bool temb_seed_given = false;
  temb->add_option("--corpus", temb_corpus)->required();
  temb->add_option("--out", temb_out)->required();
  temb->add_option("--dim", temb_dim);
  temb->add_option("--epochs", temb_epochs);
  temb->add_option("--report", temb_report);
  temb->add_option("--seed", temb_seed)->each([&](const std::string&) {
    temb_seed_given = true;
  });

  // train
  auto* train = app.add_subcommand("train", "train the diffusion denoiser");
  std::string train_corpus, train_embedder_path, train_out, train_config,
      train_metrics;
  int train_steps = 1500;
  uint64_t train_seed = 1;
  bool train_seed_given = false, no_id_guidance = false;
  train->add_option("--corpus", train_corpus)->required();
  train->add_option("--embedder", train_embedder_path)->required();
  train->add_option("--out", train_out)->required();
  train->add_option("--steps", train_steps);
  train->add_option("--config", train_config);
  train->add_option("--metrics", train_metrics);
  train->add_flag("--no-id-guidance", no_id_guidance);
  train->add_option("--seed", train_seed)->each([&](const std::string&) {
    train_seed_given = true;
  });

  // synthesize
  auto* synth = app.add_subcommand("synthesize",
                                   "inject a target user's signature");
  std::string synth_model, synth_embedder, synth_base, synth_target, synth_out;
  uint64_t synth_seed = 0;
  bool synth_seed_given = false;
  synth->add_option("--model", synth_model)->required();
  synth->add_option("--embedder", synth_embedder)->required();
  synth->add_option("--base", synth_base)->required();
  synth->add_option("--target", synth_target)->required();
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--seed", synth_seed)->each([&](const std::string&) {
    synth_seed_given = true;
  });

  // baseline-highpass
  auto* hp = app.add_subcommand("baseline-highpass",
                                "classical high-pass injection baseline");
  std::string hp_base, hp_target, hp_out;
  double hp_cutoff = 20.0;
  hp->add_option("--base", hp_base)->required();
  hp->add_option("--target", hp_target)->required();
  hp->add_option("--out", hp_out)->required();
  hp->add_option("--cutoff", hp_cutoff);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "run an evaluation protocol");
  std::string ev_model, ev_embedder, ev_corpus, ev_protocol, ev_report, ev_svg;
  uint64_t ev_seed = 0;
  bool ev_seed_given = false;
  int ev_samples = 5, ev_max_seqs = 0;
  ev->add_option("--model", ev_model);
  ev->add_option("--embedder", ev_embedder)->required();
  ev->add_option("--corpus", ev_corpus)->required();
  ev->add_option("--protocol", ev_protocol)
      ->required()
      ->check(CLI::IsMember({"recovery", "manipulation", "js", "identify"}));
  ev->add_option("--report", ev_report)->required();
  ev->add_option("--svg", ev_svg);
  ev->add_option("--samples-per-seq", ev_samples);
  ev->add_option("--max-seqs", ev_max_seqs);
  ev->add_option("--seed", ev_seed)->each([&](const std::string&) {
    ev_seed_given = true;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors exit 2, --help exits 0
  }
  (void)threads;
  (void)deterministic;

  if (gen->parsed()) {
    ccfg.seed = env_seed_fallback(ccfg.seed, gen_seed_given);
    const corpus::Corpus c = corpus::generate(ccfg);
    corpus::save(c, out_dir);
    std::cout << "wrote " << ccfg.n_users * ccfg.sequences_per_user
              << " sequences to " << out_dir << "\n";
    return 0;
  }

  if (temb->parsed()) {
    temb_seed = env_seed_fallback(temb_seed, temb_seed_given);
    const corpus::Corpus c = corpus::load(temb_corpus);
    embedder::EmbedderConfig ecfg;
    ecfg.sequence_length = c.config.sequence_length;
    ecfg.embedding_dim = temb_dim;
    ecfg.n_users = c.config.n_users;
    nn::ParamStore params = embedder::init_params(ecfg, temb_seed);

    pipeline::EmbedderDataset data;
    for (int u = 0; u < c.config.n_users; ++u)
      for (const auto& g : c.sequences[static_cast<std::size_t>(u)]) {
        data.sequences.push_back(training::preprocess_gaze(g));
        data.labels.push_back(u);
      }
    embedder::EmbedderTrainConfig tcfg;
    tcfg.epochs = temb_epochs;
    tcfg.seed = temb_seed;
    const embedder::TrainReport report =
        embedder::train_embedder(ecfg, params, data.sequences, data.labels, tcfg);
    pipeline::save_embedder(temb_out, ecfg, params);
    std::cout << "accuracy " << report.final_accuracy << " within "
              << report.within_user_similarity << " cross "
              << report.cross_user_similarity << "\n";
    if (!temb_report.empty()) {
      write_report_rows(temb_report,
                        {{"within", fmt(report.within_user_similarity), "0"},
                         {"cross", fmt(report.cross_user_similarity), "0"}},
                        "pair_type,mean,std");
    }
    return 0;
  }

  if (train->parsed()) {
    train_seed = env_seed_fallback(train_seed, train_seed_given);
    const corpus::Corpus c = corpus::load(train_corpus);
    const pipeline::EmbedderCheckpoint emb = pipeline::load_embedder(train_embedder_path);

    denoiser::DenoiserConfig dcfg;
    dcfg.sequence_length = c.config.sequence_length;
    dcfg.embedding_dim = emb.config.embedding_dim;
    training::TrainConfig tcfg;
    int sched_steps = 50;
    double beta_start = 1e-4, beta_end = 0.05;
    if (!train_config.empty())
      apply_config_json(train_config, dcfg, tcfg, sched_steps, beta_start,
                        beta_end);
    tcfg.steps = train_steps;
    tcfg.seed = train_seed;
    tcfg.id_guidance = !no_id_guidance;

    const diffusion::NoiseSchedule sched =
        diffusion::linear_schedule(sched_steps, beta_start, beta_end);
    nn::ParamStore params = denoiser::init_params(dcfg, train_seed);

    std::vector<const GazeSequence*> train_set;
    for (int u = 0; u < c.config.n_users; ++u)
      for (const auto& g : c.sequences[static_cast<std::size_t>(u)])
        train_set.push_back(&g);

    const training::TrainResult result =
        training::train(train_set, dcfg, params, emb.config, emb.params, sched,
                        tcfg, train_metrics);
    pipeline::save_denoiser(train_out, dcfg, params, sched);
    std::cout << "loss_noise " << result.mean_initial_noise << " -> "
              << result.mean_final_noise << "\n";
    return 0;
  }

  if (synth->parsed()) {
    synth_seed = env_seed_fallback(synth_seed, synth_seed_given);
    const pipeline::DenoiserCheckpoint model = pipeline::load_denoiser(synth_model);
    const pipeline::EmbedderCheckpoint emb = pipeline::load_embedder(synth_embedder);

    GazeSequence target = corpus::load_csv(synth_target);
    GazeSequence base = zoh_upsample(corpus::load_csv(synth_base),
                                     target.sample_rate);
    require(static_cast<int>(base.length()) == model.config.sequence_length,
            "synthesize: base length does not match the model");
    require(static_cast<int>(target.length()) == model.config.sequence_length,
            "synthesize: target length does not match the model");

    diffusion::ConditioningBundle cond;
    cond.observation = training::preprocess_gaze(base);
    cond.user_embedding = embedder::embed(emb.config, emb.params,
                                          training::preprocess_gaze(target));
    const diffusion::DenoiserFn fn =
        [&](const diffusion::Tensor2L& x_t, int t,
            const diffusion::ConditioningBundle& cc) {
          return denoiser::forward(model.config, model.params, x_t, t, cc);
        };
    const VelocitySequence synth_v =
        diffusion::sample(cond, fn, model.schedule, synth_seed);
    const GazeSequence out = signal::integrate(signal::denormalize(synth_v),
                                               base.x.front(), base.y.front());
    corpus::save_csv(out, synth_out);
    return 0;
  }

  if (hp->parsed()) {
    const GazeSequence target = corpus::load_csv(hp_target);
    GazeSequence base = zoh_upsample(corpus::load_csv(hp_base),
                                     target.sample_rate);
    const VelocitySequence injected =
        signal::highpass_inject(base, target, hp_cutoff);
    std::size_t invalid = 0;
    for (std::size_t i = 0; i < injected.length(); ++i) {
      if (!std::isfinite(injected.vx[i])) ++invalid;
      if (!std::isfinite(injected.vy[i])) ++invalid;
    }
    if (invalid > 0)
      std::cerr << "warning: " << invalid << " non-finite filter outputs\n";
    VelocitySequence sanitized = injected;
    for (auto& value : sanitized.vx)
      if (!std::isfinite(value)) value = 0.0;
    for (auto& value : sanitized.vy)
      if (!std::isfinite(value)) value = 0.0;
    const GazeSequence out =
        signal::integrate(sanitized, base.x.front(), base.y.front());
    corpus::save_csv(out, hp_out);
    return 0;
  }

  if (ev->parsed()) {
    ev_seed = env_seed_fallback(ev_seed, ev_seed_given);
    const corpus::Corpus c = corpus::load(ev_corpus);
    const pipeline::EmbedderCheckpoint emb = pipeline::load_embedder(ev_embedder);
    const std::vector<eval::SequenceRef> refs = pipeline::make_refs(c);
    const eval::EmbeddingTable table =
        eval::embed_all(refs, emb.config, emb.params);

    eval::EvalOptions options;
    options.seed = ev_seed;
    options.samples_per_sequence = ev_samples;
    options.max_sequences = ev_max_seqs;

    std::vector<std::vector<std::string>> rows;
    pipeline::DenoiserCheckpoint model;
    eval::ModelBundle bundle;
    const bool needs_model = ev_protocol != "identify";
    if (needs_model) {
      require(!ev_model.empty(), "evaluate: --model required for " + ev_protocol);
      model = pipeline::load_denoiser(ev_model);
      bundle.config = &model.config;
      bundle.params = &model.params;
      bundle.schedule = &model.schedule;
    }

    if (ev_protocol == "recovery" || ev_protocol == "manipulation") {
      const eval::MeanStd within = eval::within_user_baseline(table);
      const eval::MeanStd cross = eval::cross_user_baseline(table);
      rows.push_back({"within_user", fmt(within.mean), fmt(within.stddev)});
      rows.push_back({"cross_user", fmt(cross.mean), fmt(cross.stddev)});
      const eval::EvalReport report =
          ev_protocol == "recovery"
              ? eval::recovery_eval(refs, bundle, emb.config, emb.params, options)
              : eval::manipulation_eval(refs, bundle, emb.config, emb.params,
                                        options);
      rows.push_back({ev_protocol, fmt(report.similarity.mean),
                      fmt(report.similarity.stddev)});
      write_report_rows(ev_report, rows, "metric,mean,std");
      if (!ev_svg.empty() && !report.synthesized.empty()) {
        const GazeSequence trace = signal::integrate(
            report.synthesized.front(), 0.0, 0.0);
        write_svg(ev_svg, report.synthesized.front(), trace);
      }
    } else if (ev_protocol == "js") {
      // human reference velocities
      std::vector<VelocitySequence> human;
      for (const auto& ref : refs)
        human.push_back(signal::savgol_derivative(*ref.gaze));
      std::vector<const VelocitySequence*> human_ptrs;
      for (const auto& v : human) human_ptrs.push_back(&v);

      const eval::EvalReport model_report =
          eval::recovery_eval(refs, bundle, emb.config, emb.params, options);
      const eval::EvalReport hp_report = eval::highpass_recovery_eval(
          refs, emb.config, emb.params, options);

      auto js_rows = [&](const std::string& label,
                         const std::vector<VelocitySequence>& synth) {
        std::vector<const VelocitySequence*> ptrs;
        for (const auto& v : synth) ptrs.push_back(&v);
        const struct {
          const char* name;
          eval::EventFilter filter;
          int bins;
        } kinds[] = {{"all", eval::EventFilter::all, 500},
                     {"fixation", eval::EventFilter::fixation, 50},
                     {"saccade", eval::EventFilter::saccade, 350}};
        for (const auto& kind : kinds) {
          eval::HistogramSpec spec;
          spec.bin_count = kind.bins;
          const auto p = eval::velocity_histogram(human_ptrs, spec, kind.filter);
          const auto q = eval::velocity_histogram(ptrs, spec, kind.filter);
          rows.push_back({label, kind.name, fmt(eval::js_divergence(p, q))});
        }
      };
      js_rows("model", model_report.synthesized);
      js_rows("highpass", hp_report.synthesized);
      rows.push_back({"highpass_invalid", "count",
                      std::to_string(hp_report.invalid_outputs)});
      write_report_rows(ev_report, rows, "source,filter,js");
    } else {  // identify
      const corpus::Split split = corpus::split(c, 0.5, ev_seed);
      const auto train_refs = pipeline::make_refs(c, split.train);
      const auto test_refs = pipeline::make_refs(c, split.test);
      const auto train_table = eval::embed_all(train_refs, emb.config, emb.params);
      const auto test_table = eval::embed_all(test_refs, emb.config, emb.params);
      const double acc =
          eval::identify_user(train_table, test_table, c.config.n_users);
      rows.push_back({"human_only", fmt(acc)});
      write_report_rows(ev_report, rows, "variant,accuracy");
    }
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}

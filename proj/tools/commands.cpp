#include "commands.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include "json.hpp"
#include "vecspec/attract_repel.hpp"
#include "vecspec/auxgan.hpp"
#include "vecspec/constraints.hpp"
#include "vecspec/embedding.hpp"
#include "vecspec/errors.hpp"
#include "vecspec/evalsuite.hpp"
#include "vecspec/postspec.hpp"
#include "vecspec/synthetic.hpp"
#include "vecspec/xling.hpp"

using nlohmann::json;
using namespace vecspec;

namespace cli {

namespace {

EmbeddingSpace load_normalized(const std::string& path, std::size_t limit = 0) {
  std::cerr << "[vecspec] loading " << path << "\n";
  return unit_normalize(load_embeddings(path, limit));
}

WordSet vocab_set(const EmbeddingSpace& space) {
  return WordSet(space.words.begin(), space.words.end());
}

void write_json(const std::string& path, const json& j, ArtifactTracker& artifacts) {
  artifacts.add(path);
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot open for writing");
  out << j.dump(2) << "\n";
}

// Shared flag groups -------------------------------------------------------

void add_postspec_options(CLI::App* cmd, PostSpecConfig& cfg) {
  cmd->add_option("--margin", cfg.margin, "Max-margin ranking margin");
  cmd->add_option("--negatives", cfg.negatives_per_pair, "Confounders per pair, sampled in-batch");
  cmd->add_option("--batch-size", cfg.batch_size, "Mini-batch size");
  cmd->add_option("--epochs", cfg.epochs, "Training epochs");
  cmd->add_option("--iterations", cfg.iterations_per_epoch,
                  "Iterations per epoch (0: one pass over the pairs)");
  cmd->add_option("--lr", cfg.lr, "Initial SGD learning rate");
  cmd->add_option("--decay", cfg.decay, "Per-epoch learning-rate factor");
  cmd->add_option("--plateau-decay", cfg.plateau_decay,
                  "Learning-rate factor when validation stalls");
  cmd->add_option("--validation-fraction", cfg.validation_fraction,
                  "Held-out share of the training pairs");
  cmd->add_option("--hidden-count", cfg.hidden_count, "Hidden layers in the mapping net");
  cmd->add_option("--hidden-size", cfg.hidden_size, "Width of each hidden layer");
  cmd->add_option("--leaky-slope", cfg.leaky_slope, "LeakyReLU negative slope");
  cmd->add_option("--g-dropout", cfg.g_dropout, "Generator input/hidden dropout rate");
}

void add_auxgan_options(CLI::App* cmd, AuxGanConfig& cfg) {
  add_postspec_options(cmd, cfg);
  cmd->add_option("--d-steps", cfg.d_steps, "Discriminator steps per cycle");
  cmd->add_option("--label-smoothing", cfg.label_smoothing, "Golden-label smoothing factor");
  cmd->add_option("--d-dropout", cfg.d_dropout, "Discriminator input dropout rate");
  cmd->add_option("--d-lr", cfg.d_lr, "Discriminator learning rate");
  cmd->add_flag("--smooth-g-loss,!--no-smooth-g-loss", cfg.smooth_g_loss,
                "Smooth the swapped-label generator loss targets too");
}

void add_align_options(CLI::App* cmd, AlignConfig& cfg) {
  cmd->add_option("--hidden-count", cfg.hidden_count, "Discriminator hidden layers");
  cmd->add_option("--hidden-size", cfg.hidden_size, "Discriminator hidden width");
  cmd->add_option("--leaky-slope", cfg.leaky_slope, "LeakyReLU negative slope");
  cmd->add_option("--label-smoothing", cfg.label_smoothing, "Golden-label smoothing factor");
  cmd->add_option("--d-steps", cfg.d_steps, "Discriminator steps per map update");
  cmd->add_option("--batch-size", cfg.batch_size, "Mini-batch size");
  cmd->add_option("--epochs", cfg.epochs, "Adversarial epochs");
  cmd->add_option("--iterations", cfg.iterations_per_epoch,
                  "Iterations per epoch (0: one pass over the larger space)");
  cmd->add_option("--lr", cfg.lr, "Map learning rate");
  cmd->add_option("--d-lr", cfg.d_lr, "Discriminator learning rate");
  cmd->add_option("--decay", cfg.decay, "Per-epoch learning-rate factor");
  cmd->add_option("--plateau-decay", cfg.plateau_decay,
                  "Learning-rate factor when the metric stalls");
  cmd->add_option("--ortho-beta", cfg.ortho_beta, "Re-orthogonalization coefficient");
  cmd->add_option("--csls-k", cfg.csls_k, "CSLS neighborhood size");
  cmd->add_option("--dict-top-n", cfg.dict_top_n, "Vocabulary cutoff for dictionaries");
  cmd->add_option("--val-dict-size", cfg.val_dict_size,
                  "Pairs in the unsupervised validation dictionary");
  cmd->add_option("--patience", cfg.patience,
                  "Metric checks without improvement before stopping");
  cmd->add_option("--refine", cfg.n_refine, "Dictionary+Procrustes refinement passes");
}

std::string sibling_path(const std::string& primary, const std::string& suffix) {
  return primary + suffix;
}

}  // namespace

// ---- specialize ------------------------------------------------------------

namespace {

struct SpecializeOpts {
  std::string embeddings, attract, repel, output, log;
  std::string strip_prefix;
  std::string exclude_words;
  std::size_t limit = 0;
  std::uint64_t seed = 42;
  ArConfig ar;
};

void run_specialize(const SpecializeOpts& o, CLI::App& cmd, ArtifactTracker& artifacts) {
  o.ar.validate();
  write_effective_config(sibling_path(o.output, ".config"), "specialize",
                         cmd.get_parent()->config_to_str(true, true), o.seed, artifacts);

  const auto space = load_normalized(o.embeddings, o.limit);
  auto cs = load_constraints(o.attract, o.repel, vocab_set(space), o.strip_prefix);
  std::cerr << "[vecspec] constraints: " << cs.attract.size() << " attract, "
            << cs.repel.size() << " repel (" << cs.oov_dropped << " OOV dropped, "
            << cs.conflicts_dropped << " conflicts dropped)\n";

  if (!o.exclude_words.empty()) {
    WordSet test_words;
    std::ifstream in(o.exclude_words);
    if (!in) throw IoError(o.exclude_words, "cannot open for reading");
    std::string w;
    while (in >> w) test_words.insert(w);
    const std::size_t before = cs.attract.size() + cs.repel.size();
    cs = filter_disjoint(cs, test_words);
    std::cerr << "[vecspec] disjoint filter removed "
              << before - cs.attract.size() - cs.repel.size() << " pairs\n";
  }

  const auto result = specialize(space, cs, o.ar, o.seed);

  if (!o.log.empty()) {
    artifacts.add(o.log);
    std::ofstream log(o.log);
    for (const auto& e : result.epochs) {
      log << json{{"epoch", e.epoch}, {"att", e.att}, {"rep", e.rep},
                  {"pre", e.pre}, {"total", e.total}}.dump() << "\n";
      std::cerr << "[vecspec] epoch " << e.epoch << " total=" << e.total << "\n";
    }
  }
  artifacts.add(o.output);
  save_embeddings(result.space, o.output);
}

}  // namespace

void register_specialize(CLI::App& app, ArtifactTracker& artifacts) {
  auto o = std::make_shared<SpecializeOpts>();
  auto* cmd = app.add_subcommand(
      "specialize", "Fine-tune the vectors of words seen in ATTRACT/REPEL constraints");
  cmd->fallthrough();
  cmd->option_defaults()->always_capture_default();
  cmd->add_option("--embeddings", o->embeddings, "Input embedding file")->required();
  cmd->add_option("--attract", o->attract, "ATTRACT pair file")->required();
  cmd->add_option("--repel", o->repel, "REPEL pair file")->required();
  cmd->add_option("--output", o->output, "Specialized embedding file")->required();
  cmd->add_option("--log", o->log, "JSON-lines training log");
  cmd->add_option("--limit", o->limit, "Load at most this many words (0: all)");
  cmd->add_option("--strip-prefix", o->strip_prefix, "Strip this prefix from constraint tokens");
  cmd->add_option("--exclude-words", o->exclude_words,
                  "Drop constraint pairs touching any word listed in this file");
  cmd->add_option("--seed", o->seed, "RNG seed");
  cmd->add_option("--delta-attract", o->ar.delta_attract, "Attract margin");
  cmd->add_option("--delta-repel", o->ar.delta_repel, "Repel margin");
  cmd->add_option("--lambda-reg", o->ar.lambda_reg, "Pull toward the original vectors");
  cmd->add_option("--batch-attract", o->ar.batch_attract, "Attract batch size");
  cmd->add_option("--batch-repel", o->ar.batch_repel, "Repel batch size");
  cmd->add_option("--epochs", o->ar.epochs, "Training epochs");
  cmd->add_option("--lr", o->ar.lr, "Adagrad learning rate");
  cmd->callback([o, cmd, &artifacts] { run_specialize(*o, *cmd, artifacts); });
}

// ---- postspec-train / auxgan-train ----------------------------------------

namespace {

struct TrainOpts {
  std::string original, specialized, output, log;
  std::size_t limit = 0;
  std::uint64_t seed = 42;
};

TrainPairs load_pairs(const TrainOpts& o) {
  const auto original = load_normalized(o.original, o.limit);
  const auto specialized = load_normalized(o.specialized, o.limit);
  TrainPairs pairs = changed_pairs(original, specialized);
  std::cerr << "[vecspec] " << pairs.count() << " (original, specialized) pairs "
            << "(words the initial stage left unchanged are skipped)\n";
  return pairs;
}

void add_train_io_options(CLI::App* cmd, TrainOpts& o) {
  cmd->add_option("--original", o.original, "Distributional embedding file")->required();
  cmd->add_option("--specialized", o.specialized, "Initially specialized embedding file")
      ->required();
  cmd->add_option("--output", o.output, "Checkpoint file for the trained map")->required();
  cmd->add_option("--log", o.log, "JSON-lines training log");
  cmd->add_option("--limit", o.limit, "Load at most this many words (0: all)");
  cmd->add_option("--seed", o.seed, "RNG seed");
}

}  // namespace

void register_postspec_train(CLI::App& app, ArtifactTracker& artifacts) {
  auto o = std::make_shared<TrainOpts>();
  auto cfg = std::make_shared<PostSpecConfig>();
  auto* cmd = app.add_subcommand(
      "postspec-train", "Learn the global specialization map with the max-margin loss");
  cmd->fallthrough();
  cmd->option_defaults()->always_capture_default();
  add_train_io_options(cmd, *o);
  add_postspec_options(cmd, *cfg);
  cmd->callback([o, cfg, cmd, &artifacts] {
    cfg->validate();
    write_effective_config(sibling_path(o->output, ".config"), "postspec-train",
                           cmd->get_parent()->config_to_str(true, true), o->seed, artifacts);
    const auto pairs = load_pairs(*o);
    const auto result = train_postspec(pairs, *cfg, o->seed);
    if (!o->log.empty()) {
      artifacts.add(o->log);
      std::ofstream log(o->log);
      for (const auto& e : result.log) {
        log << json{{"epoch", e.epoch}, {"mm_loss", e.train_loss},
                    {"val_cosine", e.val_cosine}, {"lr", e.lr}}.dump() << "\n";
        std::cerr << "[vecspec] epoch " << e.epoch << " val=" << e.val_cosine << "\n";
      }
    }
    artifacts.add(o->output);
    save_network(result.net, o->output);
    std::cerr << "[vecspec] final validation cosine " << result.final_val_cosine << "\n";
  });
}

void register_auxgan_train(CLI::App& app, ArtifactTracker& artifacts) {
  auto o = std::make_shared<TrainOpts>();
  auto cfg = std::make_shared<AuxGanConfig>();
  auto* cmd = app.add_subcommand(
      "auxgan-train",
      "Learn the global specialization map adversarially (generator vs discriminator)");
  cmd->fallthrough();
  cmd->option_defaults()->always_capture_default();
  add_train_io_options(cmd, *o);
  add_auxgan_options(cmd, *cfg);
  cmd->callback([o, cfg, cmd, &artifacts] {
    cfg->validate();
    write_effective_config(sibling_path(o->output, ".config"), "auxgan-train",
                           cmd->get_parent()->config_to_str(true, true), o->seed, artifacts);
    const auto pairs = load_pairs(*o);
    const auto result = train_auxgan(pairs, *cfg, o->seed);
    if (!o->log.empty()) {
      artifacts.add(o->log);
      std::ofstream log(o->log);
      for (const auto& c : result.log) {
        log << json{{"epoch", c.epoch}, {"progress", c.progress},
                    {"d_loss", c.d_loss_mean}, {"g_adv_loss", c.g_adv_loss_mean},
                    {"mm_loss", c.mm_loss_mean}, {"val_cosine", c.val_cosine},
                    {"d_accuracy", c.d_accuracy}, {"lr", c.lr}}.dump() << "\n";
      }
    }
    artifacts.add(o->output);
    save_network(result.generator, o->output);
    std::cerr << "[vecspec] final validation cosine " << result.final_val_cosine << "\n";
  });
}

// ---- postspec-apply --------------------------------------------------------

void register_postspec_apply(CLI::App& app, ArtifactTracker& artifacts) {
  struct Opts {
    std::string checkpoint, embeddings, output;
    std::size_t limit = 0;
    std::uint64_t seed = 42;
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = app.add_subcommand(
      "postspec-apply", "Apply a trained map to every word of an embedding space");
  cmd->fallthrough();
  cmd->option_defaults()->always_capture_default();
  cmd->add_option("--checkpoint", o->checkpoint, "Trained map checkpoint")->required();
  cmd->add_option("--embeddings", o->embeddings, "Input embedding file")->required();
  cmd->add_option("--output", o->output, "Mapped embedding file")->required();
  cmd->add_option("--limit", o->limit, "Load at most this many words (0: all)");
  cmd->add_option("--seed", o->seed, "RNG seed (unused; kept for config uniformity)");
  cmd->callback([o, cmd, &artifacts] {
    write_effective_config(sibling_path(o->output, ".config"), "postspec-apply",
                           cmd->get_parent()->config_to_str(true, true), o->seed, artifacts);
    const auto net = load_network(o->checkpoint);
    const auto space = load_normalized(o->embeddings, o->limit);
    artifacts.add(o->output);
    save_embeddings(apply_map(net, space), o->output);
  });
}

// ---- align -----------------------------------------------------------------

void register_align(CLI::App& app, ArtifactTracker& artifacts) {
  struct Opts {
    std::string source, target, output, log;
    std::size_t limit = 0;
    std::uint64_t seed = 42;
    std::size_t restarts = 2;
    double restart_goal = 2.0;
    AlignConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = app.add_subcommand(
      "align", "Unsupervised adversarial alignment of a target space into a source space");
  cmd->fallthrough();
  cmd->option_defaults()->always_capture_default();
  cmd->add_option("--source", o->source, "Source embedding file")->required();
  cmd->add_option("--target", o->target, "Target embedding file")->required();
  cmd->add_option("--output", o->output, "Alignment map file")->required();
  cmd->add_option("--log", o->log, "JSON-lines training log");
  cmd->add_option("--limit", o->limit, "Load at most this many words per space (0: all)");
  cmd->add_option("--seed", o->seed, "RNG seed");
  cmd->add_option("--restarts", o->restarts,
                  "Adversarial restarts ranked by the unsupervised metric");
  cmd->add_option("--restart-metric-goal", o->restart_goal,
                  "Metric value at which further restarts are skipped");
  add_align_options(cmd, o->cfg);
  cmd->callback([o, cmd, &artifacts] {
    o->cfg.validate();
    if (o->restarts == 0) throw ConfigError("restarts", "must be >= 1");
    write_effective_config(sibling_path(o->output, ".config"), "align",
                           cmd->get_parent()->config_to_str(true, true), o->seed, artifacts);
    const auto source = load_normalized(o->source, o->limit);
    const auto target = load_normalized(o->target, o->limit);

    const auto aligned = adv_align_restarts(source, target, o->cfg, o->seed,
                                            o->restarts, o->restart_goal);
    std::cerr << "[vecspec] adversarial metric " << aligned.best_metric << "\n";
    const auto refined = refine_alignment(source, target, aligned.map, o->cfg);
    std::cerr << "[vecspec] dictionary cosine after refinement "
              << refined.dict_mean_cosine.back() << "\n";

    if (!o->log.empty()) {
      artifacts.add(o->log);
      std::ofstream log(o->log);
      for (const auto& c : aligned.log) {
        log << json{{"epoch", c.epoch}, {"progress", c.progress},
                    {"d_loss", c.d_loss_mean}, {"adv_loss", c.adv_loss_mean},
                    {"metric", c.metric}, {"ortho_error", c.ortho_error}}.dump() << "\n";
      }
      for (std::size_t i = 0; i < refined.dict_mean_cosine.size(); ++i) {
        log << json{{"refine_pass", i + 1},
                    {"dict_mean_cosine", refined.dict_mean_cosine[i]}}.dump() << "\n";
      }
    }
    artifacts.add(o->output);
    save_alignment(refined.map, o->output);
  });
}

// ---- transfer --------------------------------------------------------------

void register_transfer(CLI::App& app, ArtifactTracker& artifacts) {
  struct Opts {
    std::string map, generator, target, output;
    std::size_t limit = 0;
    std::uint64_t seed = 42;
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = app.add_subcommand(
      "transfer", "Zero-shot specialization of a target space through an alignment map");
  cmd->fallthrough();
  cmd->option_defaults()->always_capture_default();
  cmd->add_option("--map", o->map, "Alignment map file")->required();
  cmd->add_option("--generator", o->generator, "Source-trained map checkpoint")->required();
  cmd->add_option("--target", o->target, "Target embedding file")->required();
  cmd->add_option("--output", o->output, "Specialized target embedding file")->required();
  cmd->add_option("--limit", o->limit, "Load at most this many words (0: all)");
  cmd->add_option("--seed", o->seed, "RNG seed (unused; kept for config uniformity)");
  cmd->callback([o, cmd, &artifacts] {
    write_effective_config(sibling_path(o->output, ".config"), "transfer",
                           cmd->get_parent()->config_to_str(true, true), o->seed, artifacts);
    const auto map = load_alignment(o->map);
    const auto generator = load_network(o->generator);
    const auto target = load_normalized(o->target, o->limit);
    artifacts.add(o->output);
    save_embeddings(zero_shot_specialize(map, target, generator), o->output);
  });
}

// ---- eval-sim / eval-ls ----------------------------------------------------

void register_eval_sim(CLI::App& app, ArtifactTracker& artifacts) {
  struct Opts {
    std::string embeddings, dataset, output;
    std::size_t limit = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = app.add_subcommand(
      "eval-sim", "Spearman correlation against a gold word-similarity dataset");
  cmd->fallthrough();
  cmd->option_defaults()->always_capture_default();
  cmd->add_option("--embeddings", o->embeddings, "Embedding file")->required();
  cmd->add_option("--dataset", o->dataset, "Tab-separated word1/word2/score file")->required();
  cmd->add_option("--output", o->output, "JSON result file")->required();
  cmd->add_option("--limit", o->limit, "Load at most this many words (0: all)");
  cmd->callback([o, &artifacts] {
    const auto space = load_normalized(o->embeddings, o->limit);
    const auto dataset = load_similarity_dataset(o->dataset);
    const auto res = eval_similarity(space, dataset);
    write_json(o->output,
               json{{"rho", res.rho},
                    {"coverage", res.coverage},
                    {"pairs_total", res.pairs_total},
                    {"pairs_evaluated", res.pairs_evaluated}},
               artifacts);
    std::cerr << "[vecspec] rho=" << res.rho << " coverage=" << res.coverage << "\n";
  });
}

void register_eval_ls(CLI::App& app, ArtifactTracker& artifacts) {
  struct Opts {
    std::string embeddings, dataset, output;
    std::size_t limit = 0;
    std::size_t candidates = 10;
  };
  auto o = std::make_shared<Opts>();
  auto* cmd = app.add_subcommand(
      "eval-ls", "Lexical-simplification accuracy with the embedding-based ranker");
  cmd->fallthrough();
  cmd->option_defaults()->always_capture_default();
  cmd->add_option("--embeddings", o->embeddings, "Embedding file")->required();
  cmd->add_option("--dataset", o->dataset,
                  "Tab-separated sentence/index/substitutes file")->required();
  cmd->add_option("--output", o->output, "JSON result file")->required();
  cmd->add_option("--limit", o->limit, "Load at most this many words (0: all)");
  cmd->add_option("--candidates", o->candidates, "Substitution candidates per complex word");
  cmd->callback([o, &artifacts] {
    const auto space = load_normalized(o->embeddings, o->limit);
    const auto dataset = load_simplification_dataset(o->dataset);
    const auto res = ls_accuracy(space, dataset, o->candidates);
    write_json(o->output,
               json{{"accuracy", res.accuracy},
                    {"records_total", res.records_total},
                    {"records_correct", res.records_correct},
                    {"records_skipped_oov", res.records_skipped_oov}},
               artifacts);
    std::cerr << "[vecspec] accuracy=" << res.accuracy << "\n";
  });
}

// ---- demo-synthetic --------------------------------------------------------

namespace {

struct DemoOpts {
  std::string out_dir;
  std::uint64_t seed = 1;
  std::size_t n_seeds = 1;
  std::size_t jobs = 1;
  Eigen::Index dim = 32;
  std::size_t n_seen = 5000;
  std::size_t n_heldout = 1000;
  double target_noise = 0.0;
  std::size_t restarts = 3;
  double restart_goal = 0.75;
  AuxGanConfig aux;
  AlignConfig align;
};

struct DemoSeedResult {
  std::uint64_t seed = 0;
  double generator_heldout = 0.0;
  double align_metric = 0.0;
  double zero_shot_heldout = 0.0;
};

DemoSeedResult run_demo_seed(const DemoOpts& o, std::uint64_t seed,
                             const std::string& artifact_dir,
                             ArtifactTracker* artifacts) {
  SyntheticConfig scfg;
  scfg.dim = o.dim;
  const auto task = make_synthetic_task(o.n_seen, o.n_heldout, scfg, seed);
  const auto bilingual =
      make_synthetic_target(task.map, task.original.matrix, o.target_noise, seed + 500);

  const auto aux = train_auxgan(task.seen_pairs(), o.aux, seed);
  DemoSeedResult result;
  result.seed = seed;
  result.generator_heldout = mean_mapped_cosine(aux.generator, task.heldout_pairs());
  std::cerr << "[vecspec] seed " << seed << ": generator held-out cosine "
            << result.generator_heldout << "\n";

  const auto aligned =
      adv_align_restarts(task.original, bilingual.target, o.align, seed,
                         o.restarts, o.restart_goal);
  result.align_metric = aligned.best_metric;
  const auto refined =
      refine_alignment(task.original, bilingual.target, aligned.map, o.align);

  const auto transferred =
      zero_shot_specialize(refined.map, bilingual.target, aux.generator);

  // Held-out target rows mirror the source held-out block: the generator
  // never saw them and the vocabulary is fully disjoint.
  const Eigen::Index n_held = static_cast<Eigen::Index>(o.n_heldout);
  const Eigen::Index lo = transferred.matrix.rows() - n_held;
  double cos_sum = 0.0;
  for (Eigen::Index i = 0; i < n_held; ++i) {
    cos_sum += transferred.matrix.row(lo + i).dot(bilingual.truth.matrix.row(lo + i));
  }
  result.zero_shot_heldout = cos_sum / static_cast<double>(n_held);
  std::cerr << "[vecspec] seed " << seed << ": zero-shot held-out cosine "
            << result.zero_shot_heldout << "\n";

  if (!artifact_dir.empty() && artifacts != nullptr) {
    auto put = [&](const std::string& name) {
      const std::string p = artifact_dir + "/" + name;
      artifacts->add(p);
      return p;
    };
    save_embeddings(task.original, put("source_distributional.vec"));
    save_embeddings(task.truth, put("source_specialized.vec"));
    save_embeddings(bilingual.target, put("target_distributional.vec"));
    save_network(aux.generator, put("generator.ckpt"));
    save_alignment(refined.map, put("alignment.map"));
    save_embeddings(transferred, put("target_specialized.vec"));
  }
  return result;
}

void run_demo(const DemoOpts& o, CLI::App& cmd, ArtifactTracker& artifacts) {
  o.aux.validate();
  o.align.validate();
  if (o.n_seeds == 0) throw ConfigError("seeds", "must be >= 1");
  if (o.jobs == 0) throw ConfigError("jobs", "must be >= 1");

  std::filesystem::create_directories(o.out_dir);
  write_effective_config(o.out_dir + "/effective.config", "demo-synthetic",
                         cmd.get_parent()->config_to_str(true, true), o.seed, artifacts);

  std::vector<DemoSeedResult> results(o.n_seeds);
  std::vector<std::string> errors(o.n_seeds);

  auto worker = [&](std::size_t index) {
    const std::uint64_t seed = o.seed + index;
    try {
      results[index] = run_demo_seed(o, seed, index == 0 ? o.out_dir : "",
                                     index == 0 ? &artifacts : nullptr);
    } catch (const std::exception& e) {
      errors[index] = e.what();
    }
  };

  if (o.jobs <= 1) {
    for (std::size_t i = 0; i < o.n_seeds; ++i) worker(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    const std::size_t n_threads = std::min(o.jobs, o.n_seeds);
    for (std::size_t t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < o.n_seeds; i = next.fetch_add(1)) {
          worker(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  for (std::size_t i = 0; i < o.n_seeds; ++i) {
    if (!errors[i].empty()) {
      throw Error("demo-synthetic seed " + std::to_string(o.seed + i) +
                  " failed: " + errors[i]);
    }
  }

  json seeds = json::array();
  std::size_t passed = 0;
  for (const auto& r : results) {
    seeds.push_back(json{{"seed", r.seed},
                         {"generator_heldout_cosine", r.generator_heldout},
                         {"align_metric", r.align_metric},
                         {"zero_shot_heldout_cosine", r.zero_shot_heldout}});
    if (r.zero_shot_heldout > 0.85) ++passed;
  }
  write_json(o.out_dir + "/results.json",
             json{{"dim", o.dim},
                  {"seen", o.n_seen},
                  {"heldout", o.n_heldout},
                  {"base_seed", o.seed},
                  {"seeds", seeds},
                  {"zero_shot_above_085", passed}},
             artifacts);
}

}  // namespace

void register_demo_synthetic(CLI::App& app, ArtifactTracker& artifacts) {
  auto o = std::make_shared<DemoOpts>();
  // Desk-scale defaults sized for a single core; the full 2048-wide
  // networks need substantially more compute.
  o->aux.hidden_size = 128;
  o->aux.epochs = 10;
  o->aux.iterations_per_epoch = 400;
  o->aux.lr = 0.3;
  o->align.hidden_size = 64;
  o->align.batch_size = 64;
  o->align.epochs = 30;
  o->align.iterations_per_epoch = 500;
  o->align.lr = 0.1;
  o->align.ortho_beta = 0.5;
  o->align.val_dict_size = 1000;
  o->align.patience = 1000;

  auto* cmd = app.add_subcommand(
      "demo-synthetic",
      "End-to-end pipeline on generated data: train the adversarial map on a "
      "synthetic source task, align a rotated disjoint target space, transfer");
  cmd->fallthrough();
  cmd->option_defaults()->always_capture_default();
  cmd->add_option("--out-dir", o->out_dir, "Output directory")->required();
  cmd->add_option("--seed", o->seed, "Base RNG seed");
  cmd->add_option("--seeds", o->n_seeds, "Number of consecutive seeds to run");
  cmd->add_option("--jobs", o->jobs, "Seeds to run concurrently");
  cmd->add_option("--dim", o->dim, "Vector dimensionality");
  cmd->add_option("--seen", o->n_seen, "Seen (training) words in the source task");
  cmd->add_option("--heldout", o->n_heldout, "Held-out words in the source task");
  cmd->add_option("--target-noise", o->target_noise,
                  "Gaussian noise on the target base before the planted rotation");
  cmd->add_option("--restarts", o->restarts, "Adversarial alignment restarts");
  cmd->add_option("--restart-metric-goal", o->restart_goal,
                  "Metric value at which further restarts are skipped");
  cmd->add_option("--aux-epochs", o->aux.epochs, "Adversarial map training epochs");
  cmd->add_option("--aux-iterations", o->aux.iterations_per_epoch,
                  "Iterations per adversarial training epoch");
  cmd->add_option("--aux-hidden-size", o->aux.hidden_size, "Map network hidden width");
  cmd->add_option("--aux-lr", o->aux.lr, "Map training learning rate");
  cmd->add_option("--align-epochs", o->align.epochs, "Alignment epochs");
  cmd->add_option("--align-iterations", o->align.iterations_per_epoch,
                  "Iterations per alignment epoch");
  cmd->add_option("--align-hidden-size", o->align.hidden_size,
                  "Alignment discriminator hidden width");
  cmd->add_option("--align-lr", o->align.lr, "Alignment map learning rate");
  cmd->add_option("--ortho-beta", o->align.ortho_beta, "Re-orthogonalization coefficient");
  cmd->add_option("--refine", o->align.n_refine, "Refinement passes");
  cmd->callback([o, cmd, &artifacts] { run_demo(*o, *cmd, artifacts); });
}

}  // namespace cli

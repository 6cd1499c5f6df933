#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <sstream>

#include "gswm/attacks.hpp"
#include "gswm/codec.hpp"
#include "gswm/detection.hpp"
#include "gswm/error.hpp"
#include "gswm/evaluation.hpp"
#include "gswm/fileio.hpp"
#include "gswm/fit.hpp"
#include "gswm/frequency.hpp"
#include "gswm/metrics.hpp"
#include "gswm/pretrain.hpp"
#include "gswm/rasterizer.hpp"
#include "gswm/scene_io.hpp"
#include "gswm/spectral.hpp"
#include "gswm/synth.hpp"
#include "gswm/trainer.hpp"

namespace fs = std::filesystem;

namespace gswm::cli {
namespace {

void need(const std::string& value, const char* flag) {
  require(!value.empty(), ErrorCode::kInvalidArgument, std::string(flag) + " is required");
}

fs::path out_dir(const Globals& g) {
  need(g.out, "--out");
  fs::create_directories(g.out);
  return g.out;
}

std::string view_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%03zu.png", prefix, i);
  return buf;
}

// A single directory argument expands to its *.png files in name order.
std::vector<fs::path> expand_images(const std::vector<std::string>& args) {
  std::vector<fs::path> paths;
  if (args.size() == 1 && fs::is_directory(args[0])) {
    for (const auto& e : fs::directory_iterator(args[0])) {
      if (e.path().extension() == ".png") paths.push_back(e.path());
    }
    std::sort(paths.begin(), paths.end());
  } else {
    paths.assign(args.begin(), args.end());
  }
  require(!paths.empty(), ErrorCode::kInvalidArgument, "no input images");
  return paths;
}

void print(const std::string& text) { std::fwrite(text.data(), 1, text.size(), stdout); }

MessageBits message_or_random(const std::string& hex, std::uint64_t seed) {
  return hex.empty() ? MessageBits::random(seed) : MessageBits::from_hex(hex);
}

void add_regularize_options(CLI::App* sub, RegularizeConfig& rc) {
  sub->add_option("--percentile", rc.percentile, "Carrier percentile of sampling frequency")->capture_default_str();
  sub->add_option("--lambda", rc.lambda, "Low-pass filter strength")->capture_default_str();
  sub->add_option("--spawn", rc.spawn_count, "Children spawned per carrier")->capture_default_str();
}

Command synth_command(CLI::App& app, const Globals& g) {
  struct Opts {
    std::string kind = "blobs";
    int count = 500;
    SynthConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("synth", "Generate a procedural scene with train and test cameras");
  sub->add_option("--kind", o->kind, "blobs, textured-card or ring")->capture_default_str();
  sub->add_option("--count", o->count, "Number of Gaussians")->capture_default_str();
  sub->add_option("--resolution", o->cfg.resolution, "Image side in pixels")->capture_default_str();
  sub->add_option("--train-views", o->cfg.train_views)->capture_default_str();
  sub->add_option("--test-views", o->cfg.test_views)->capture_default_str();
  return {sub, [o, &g] {
            const fs::path dir = out_dir(g);
            const auto s = synth_scene(parse_synth_kind(o->kind), o->count, g.seed, o->cfg);
            save_scene(dir / "scene.gsw", s.scene);
            const auto train = s.train_cameras();
            const auto test = s.test_cameras();
            save_cameras(dir / "train_cameras.txt", train);
            save_cameras(dir / "test_cameras.txt", test);
            fs::create_directories(dir / "train");
            for (std::size_t i = 0; i < train.size(); ++i) {
              write_png(dir / "train" / view_name("view", i), render(s.scene, train[i]));
            }
            std::printf("scene %s: %zu primitives, %zu train + %zu test cameras\n", o->kind.c_str(),
                        s.scene.size(), train.size(), test.size());
          }};
}

Command fit_command(CLI::App& app, const Globals& g) {
  struct Opts {
    std::vector<std::string> images;
    std::string cameras;
    FitConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("fit", "Fit a scene to posed images");
  sub->add_option("--images", o->images, "PNG files, or one directory of PNGs");
  sub->add_option("--cameras", o->cameras, "Camera file matching the images");
  sub->add_option("--count", o->cfg.n_gaussians, "Number of Gaussians")->capture_default_str();
  sub->add_option("--steps", o->cfg.steps, "Optimizer steps")->capture_default_str();
  return {sub, [o, &g] {
            need(o->cameras, "--cameras");
            need(g.out, "--out");
            std::vector<ImageBuffer> images;
            for (const auto& p : expand_images(o->images)) images.push_back(read_png(p));
            FitConfig cfg = o->cfg;
            cfg.seed = g.seed;
            const auto r = fit_scene(images, load_cameras(o->cameras), cfg, [](const FitLog& l) {
              std::fprintf(stderr, "step %d mse %.6f\n", l.step, l.mse);
            });
            save_scene(g.out, r.scene);
            std::printf("train psnr %.3f\n", r.train_psnr);
          }};
}

Command pretrain_command(CLI::App& app, const Globals& g) {
  auto cfg = std::make_shared<PretrainConfig>();
  auto* sub = app.add_subcommand("pretrain-decoder", "Jointly train the message encoder and decoder on 2D images");
  sub->add_option("--steps", cfg->steps)->capture_default_str();
  sub->add_option("--batch", cfg->batch)->capture_default_str();
  sub->add_option("--resolution", cfg->resolution)->capture_default_str();
  sub->add_option("--lr", cfg->lr)->capture_default_str();
  sub->add_option("--weight-bce", cfg->weight_bce)->capture_default_str();
  sub->add_option("--weight-image", cfg->weight_image)->capture_default_str();
  sub->add_option("--weight-adv", cfg->weight_adv)->capture_default_str();
  sub->add_option("--max-level", cfg->max_attack_level, "Strongest in-loop attack level")->capture_default_str();
  sub->add_option("--warmup", cfg->clean_warmup_steps, "Steps trained without augmentations")->capture_default_str();
  sub->add_option("--corpus", cfg->corpus_size)->capture_default_str();
  sub->add_option("--holdout", cfg->holdout)->capture_default_str();
  sub->add_option("--log-every", cfg->log_every)->capture_default_str();
  return {sub, [cfg, &g] {
            const fs::path dir = out_dir(g);
            PretrainConfig c = *cfg;
            c.seed = g.seed;
            const auto r = pretrain_decoder(c, [](const PretrainLog& l) {
              std::fprintf(stderr, "step %d bce %.4f image %.6f adv %.4f acc %.3f\n", l.step, l.bce, l.image, l.adv,
                           l.bit_accuracy);
            });
            save_model(dir / "decoder.gswd", r.decoder);
            save_model(dir / "encoder.gswd", r.encoder);
            atomic_write_file(dir / "pretrain.json", r.to_json());
            std::printf("holdout bit accuracy %.4f psnr %.2f\n", r.holdout_bit_accuracy, r.holdout_psnr);
          }};
}

Command select_command(CLI::App& app, const Globals& g) {
  struct Opts {
    std::string scene;
    std::string cameras;
    RegularizeConfig rc;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("select", "Report sampling frequencies and dump the carrier set");
  sub->add_option("--scene", o->scene);
  sub->add_option("--cameras", o->cameras, "Training cameras");
  add_regularize_options(sub, o->rc);
  return {sub, [o, &g] {
            need(o->scene, "--scene");
            need(o->cameras, "--cameras");
            const fs::path dir = out_dir(g);
            const auto prep = prepare_carriers(load_scene(o->scene), load_cameras(o->cameras), o->rc, g.seed);
            atomic_write_file(dir / "frequency.csv", frequency_report_csv(prep.report));
            std::ostringstream carriers;
            for (int i : prep.carriers) carriers << i << '\n';
            atomic_write_file(dir / "carriers.txt", carriers.str());
            save_scene(dir / "densified.gsw", prep.densified.scene);
            std::printf("carriers %zu spawned %zu\n", prep.carriers.size(), prep.densified.spawned.size());
          }};
}

Command embed_command(CLI::App& app, const Globals& g) {
  struct Opts {
    std::string scene;
    std::string cameras;
    std::string decoder;
    std::string message;
    RegularizeConfig rc;
    TrainConfig cfg;
    bool no_adv = false;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("embed", "Select carriers, densify and embed a message into a scene");
  sub->add_option("--scene", o->scene);
  sub->add_option("--cameras", o->cameras, "Training cameras");
  sub->add_option("--decoder", o->decoder, "Pretrained decoder weights");
  sub->add_option("--message", o->message, "12 hex digits; random from --seed when omitted");
  sub->add_option("--iterations", o->cfg.iterations)->capture_default_str();
  sub->add_option("--lr", o->cfg.lr)->capture_default_str();
  sub->add_option("--weight-rec", o->cfg.weights.rec)->capture_default_str();
  sub->add_option("--weight-wm", o->cfg.weights.wm)->capture_default_str();
  sub->add_option("--weight-adv", o->cfg.weights.adv)->capture_default_str();
  sub->add_option("--blur-min", o->cfg.blur_sigma_min)->capture_default_str();
  sub->add_option("--blur-max", o->cfg.blur_sigma_max)->capture_default_str();
  sub->add_flag("--no-adv", o->no_adv, "Disable the adversarial term");
  add_regularize_options(sub, o->rc);
  return {sub, [o, &g] {
            need(o->scene, "--scene");
            need(o->cameras, "--cameras");
            need(o->decoder, "--decoder");
            const fs::path dir = out_dir(g);
            const auto cameras = load_cameras(o->cameras);
            const auto decoder = load_decoder(o->decoder);
            const MessageBits msg = message_or_random(o->message, g.seed);
            const auto prep = prepare_carriers(load_scene(o->scene), cameras, o->rc, g.seed);
            std::vector<ImageBuffer> refs;
            for (const auto& c : cameras) refs.push_back(render(prep.densified.scene, c));
            TrainConfig cfg = o->cfg;
            cfg.seed = g.seed;
            cfg.adv_enabled = !o->no_adv;
            const auto r = embed(prep.densified.scene, cameras, refs, decoder, msg, cfg, [](const StepLog& l) {
              if (l.step % 100 == 0) {
                std::fprintf(stderr, "step %d total %.5f rec %.6f wm %.4f adv %.4f\n", l.step, l.total, l.rec, l.wm,
                             l.adv);
              }
            });
            save_scene(dir / "reference.gsw", prep.densified.scene);
            save_scene(dir / "watermarked.gsw", r.scene);
            atomic_write_file(dir / "embed.json", r.report.to_json());
            std::printf("message %s train bit accuracy %.4f\n", msg.to_hex().c_str(),
                        r.report.final_clean_bit_accuracy);
          }};
}

Command render_command(CLI::App& app, const Globals& g) {
  struct Opts {
    std::string scene;
    std::string cameras;
    int index = -1;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("render", "Render a scene; --out is a PNG with --index, else a directory");
  sub->add_option("--scene", o->scene);
  sub->add_option("--cameras", o->cameras);
  sub->add_option("--index", o->index, "Single camera to render");
  return {sub, [o, &g] {
            need(o->scene, "--scene");
            need(o->cameras, "--cameras");
            need(g.out, "--out");
            const auto scene = load_scene(o->scene);
            const auto cameras = load_cameras(o->cameras);
            if (o->index >= 0) {
              require(o->index < static_cast<int>(cameras.size()), ErrorCode::kInvalidArgument,
                      "--index out of range");
              write_png(g.out, render(scene, cameras[o->index]));
              return;
            }
            const fs::path dir = out_dir(g);
            for (std::size_t i = 0; i < cameras.size(); ++i) write_png(dir / view_name("view", i), render(scene, cameras[i]));
          }};
}

Command attack_command(CLI::App& app, const Globals& g) {
  struct Opts {
    std::string input;
    std::string kind;
    int level = 3;
    std::optional<double> parameter;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("attack", "Apply one attack to a PNG");
  sub->add_option("--input", o->input);
  sub->add_option("--kind", o->kind, "blur, brightness, contrast, jpeg_proxy, noise, erasing, resized_crop, rotation, elastic");
  sub->add_option("--level", o->level, "Ladder level 1..5")->capture_default_str();
  sub->add_option("--param", o->parameter, "Explicit strength, overrides the level");
  return {sub, [o, &g] {
            need(o->input, "--input");
            need(o->kind, "--kind");
            need(g.out, "--out");
            AttackSpec spec{parse_attack_kind(o->kind), o->level, o->parameter, g.seed};
            write_png(g.out, apply(spec, read_png(o->input)));
          }};
}

Command extract_command(CLI::App& app, const Globals& g) {
  struct Opts {
    std::string input;
    std::string decoder;
    std::string message;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("extract", "Decode the message from an image");
  sub->add_option("--input", o->input);
  sub->add_option("--decoder", o->decoder);
  sub->add_option("--message", o->message, "Reference message for accuracy and detection");
  return {sub, [o, &g] {
            need(o->input, "--input");
            need(o->decoder, "--decoder");
            const MessageBits decoded = decode_bits(decoder_forward(load_decoder(o->decoder), read_png(o->input)));
            std::ostringstream text;
            text << "message " << decoded.to_hex() << '\n';
            if (!o->message.empty()) {
              const int threshold = detection_threshold(kMessageBits, 0.01);
              const auto s = detect(decoded, MessageBits::from_hex(o->message), threshold);
              text << "bit_accuracy " << s.bit_accuracy << '\n'
                   << "matched_bits " << s.matched_bits << '\n'
                   << "threshold_bits " << s.threshold_bits << '\n'
                   << "detected " << (s.detected ? "true" : "false") << '\n';
            }
            print(text.str());
            if (!g.out.empty()) atomic_write_file(g.out, text.str());
          }};
}

Command evaluate_command(CLI::App& app, const Globals& g) {
  struct Opts {
    std::string scene;
    std::string reference;
    std::string train;
    std::string test;
    std::string decoder;
    std::string message;
    int trials = 5;
    int k = 1;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("evaluate", "Full robustness and fidelity report over train, test and interpolated views");
  sub->add_option("--scene", o->scene, "Watermarked scene");
  sub->add_option("--reference", o->reference, "Scene rendered as the quality reference");
  sub->add_option("--cameras", o->train, "Training cameras");
  sub->add_option("--test-cameras", o->test);
  sub->add_option("--decoder", o->decoder);
  sub->add_option("--message", o->message);
  sub->add_option("--trials", o->trials, "Attack seeds per cell")->capture_default_str();
  sub->add_option("--interpolate", o->k, "Views synthesized per train pair")->capture_default_str();
  return {sub, [o, &g] {
            for (const auto& [v, f] : {std::pair{o->scene, "--scene"}, {o->reference, "--reference"},
                                       {o->train, "--cameras"}, {o->test, "--test-cameras"},
                                       {o->decoder, "--decoder"}, {o->message, "--message"}}) {
              need(v, f);
            }
            const fs::path dir = out_dir(g);
            auto protocol = EvalProtocol::standard(load_cameras(o->train), load_cameras(o->test), o->k);
            protocol.trials_per_cell = o->trials;
            protocol.seed = g.seed;
            const auto table = run_evaluation(load_scene(o->scene), load_scene(o->reference), protocol,
                                              load_decoder(o->decoder), MessageBits::from_hex(o->message));
            atomic_write_file(dir / "report.csv", table.to_csv());
            atomic_write_file(dir / "report.json", table.to_json());
            for (const auto& r : table.rows) {
              if (r.attack == "none") {
                std::printf("%-11s clean bit accuracy %.4f tpr %.3f psnr %.2f\n", r.view_set.c_str(), r.bit_accuracy,
                            r.tpr_at_1pct_fpr, r.psnr);
              }
            }
          }};
}

Command spectrum_command(CLI::App& app, const Globals& g) {
  struct Opts {
    std::string input;
    std::vector<std::string> attacks;
    int level = 3;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("spectrum", "Band-energy retention of attacks applied to an image");
  sub->add_option("--input", o->input);
  sub->add_option("--attacks", o->attacks, "Attack names; all when omitted");
  sub->add_option("--level", o->level)->capture_default_str();
  return {sub, [o, &g] {
            need(o->input, "--input");
            const ImageBuffer original = read_png(o->input);
            std::vector<AttackKind> kinds;
            for (const auto& name : o->attacks) kinds.push_back(parse_attack_kind(name));
            if (kinds.empty()) kinds.assign(kAllAttacks.begin(), kAllAttacks.end());
            std::vector<std::pair<std::string, ImageBuffer>> edits;
            for (AttackKind k : kinds) {
              AttackSpec spec{k, o->level, std::nullopt, g.seed};
              edits.emplace_back(std::string(attack_name(k)) + "_L" + std::to_string(o->level), apply(spec, original));
            }
            const auto rows = fingerprint_report(original, edits);
            if (g.out.empty()) {
              print(fingerprint_csv(rows));
              return;
            }
            const fs::path dir = out_dir(g);
            atomic_write_file(dir / "fingerprint.csv", fingerprint_csv(rows));
            atomic_write_file(dir / "fingerprint.json", fingerprint_json(rows));
          }};
}

}  // namespace

std::vector<Command> register_commands(CLI::App& app, const Globals& globals) {
  return {synth_command(app, globals),    fit_command(app, globals),     pretrain_command(app, globals),
          select_command(app, globals),   embed_command(app, globals),   render_command(app, globals),
          attack_command(app, globals),   extract_command(app, globals), evaluate_command(app, globals),
          spectrum_command(app, globals)};
}

}  // namespace gswm::cli

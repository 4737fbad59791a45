// Copyright 2026 The usrc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "usrc/train/trainer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "usrc/dsp/bandwidth.h"
#include "usrc/error.h"
#include "usrc/train/checkpoint.h"
#include "train/internal.h"

namespace usrc::train {

using nlohmann::json;
using nn::Tensor;

namespace {

void Scale(Tensor<float>& t, float s) {
  for (float& v : t.vec()) v *= s;
}

void ZeroGrads(const nn::ParameterList<float>& params) {
  for (auto* p : params) p->ZeroGrad();
}

bool Finite(const LossBreakdown& b) {
  return std::isfinite(b.l_sr) && std::isfinite(b.l_disc) &&
         std::isfinite(b.l_adv) && std::isfinite(b.l_fm) &&
         std::isfinite(b.l_cm);
}

json BreakdownJson(const LossBreakdown& b) {
  return {{"l_sr", b.l_sr},   {"l_disc", b.l_disc}, {"l_adv", b.l_adv},
          {"l_fm", b.l_fm},   {"l_cm", b.l_cm},     {"total", b.total},
          {"generator", b.generator}};
}

LossBreakdown BreakdownFromJson(const json& j) {
  LossBreakdown b;
  b.l_sr = j.at("l_sr");
  b.l_disc = j.at("l_disc");
  b.l_adv = j.at("l_adv");
  b.l_fm = j.at("l_fm");
  b.l_cm = j.at("l_cm");
  b.total = j.at("total");
  b.generator = j.at("generator");
  return b;
}

json TrainConfigJson(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"adam_eps", c.adam.eps},
          {"weight_decay", c.adam.weight_decay},
          {"batch_size", c.batch_size},
          {"total_steps", c.total_steps},
          {"seed", c.seed},
          {"use_subband", c.use_subband},
          {"use_discriminator", c.use_discriminator},
          {"use_scheduler", c.use_scheduler},
          {"scheduler_rate", c.scheduler_rate},
          {"checkpoint_every", c.checkpoint_every},
          {"ema_decay", c.ema_decay},
          {"crop_samples", c.crop_samples},
          {"filter_bandwidth", c.filter_bandwidth},
          {"bandwidth_threshold_db", c.bandwidth_threshold_db},
          {"weights",
           {{"alpha_low", c.weights.alpha_low},
            {"alpha_high", c.weights.alpha_high},
            {"lambda_sr", c.weights.lambda_sr},
            {"lambda_disc", c.weights.lambda_disc},
            {"lambda_adv", c.weights.lambda_adv},
            {"lambda_fm", c.weights.lambda_fm},
            {"lambda_cm", c.weights.lambda_cm}}},
          {"disc",
           {{"in_channels", c.disc.in_channels},
            {"channels", c.disc.channels},
            {"kernel", c.disc.kernel},
            {"stride", c.disc.stride},
            {"slope", c.disc.slope}}}};
}

TrainConfig TrainConfigFromJson(const json& j) {
  TrainConfig c;
  c.lr = j.at("lr");
  c.adam.beta1 = j.at("beta1");
  c.adam.beta2 = j.at("beta2");
  c.adam.eps = j.at("adam_eps");
  c.adam.weight_decay = j.at("weight_decay");
  c.batch_size = j.at("batch_size");
  c.total_steps = j.at("total_steps");
  c.seed = j.at("seed");
  c.use_subband = j.at("use_subband");
  c.use_discriminator = j.at("use_discriminator");
  c.use_scheduler = j.at("use_scheduler");
  c.scheduler_rate = j.at("scheduler_rate");
  c.checkpoint_every = j.at("checkpoint_every");
  c.ema_decay = j.at("ema_decay");
  c.crop_samples = j.at("crop_samples");
  c.filter_bandwidth = j.at("filter_bandwidth");
  c.bandwidth_threshold_db = j.at("bandwidth_threshold_db");
  const json& w = j.at("weights");
  c.weights.alpha_low = w.at("alpha_low");
  c.weights.alpha_high = w.at("alpha_high");
  c.weights.lambda_sr = w.at("lambda_sr");
  c.weights.lambda_disc = w.at("lambda_disc");
  c.weights.lambda_adv = w.at("lambda_adv");
  c.weights.lambda_fm = w.at("lambda_fm");
  c.weights.lambda_cm = w.at("lambda_cm");
  const json& d = j.at("disc");
  c.disc.in_channels = d.at("in_channels");
  c.disc.channels = d.at("channels").get<std::vector<int>>();
  c.disc.kernel = d.at("kernel");
  c.disc.stride = d.at("stride");
  c.disc.slope = d.at("slope");
  return c;
}

void AppendMoments(const std::string& prefix, AdamW& opt,
                   const nn::ParameterList<float>& params,
                   std::vector<TensorRecord>& out) {
  if (opt.first_moments().empty()) return;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const int n = static_cast<int>(opt.first_moments()[k].size());
    out.push_back({prefix + ".m." + params[k]->name, {1, 1, 1, n},
                   opt.first_moments()[k]});
    out.push_back({prefix + ".v." + params[k]->name, {1, 1, 1, n},
                   opt.second_moments()[k]});
  }
}

void LoadMoments(const std::string& prefix, const CheckpointFile& f, AdamW& opt,
                 const nn::ParameterList<float>& params) {
  opt.first_moments().clear();
  opt.second_moments().clear();
  if (opt.steps() == 0) return;
  for (const auto* p : params) {
    const TensorRecord& m = f.Get(prefix + ".m." + p->name);
    const TensorRecord& v = f.Get(prefix + ".v." + p->name);
    if (m.data.size() != p->value.size() || v.data.size() != p->value.size()) {
      Fail(ErrorClass::kCheckpoint, "optimizer state size mismatch for " + p->name);
    }
    opt.first_moments().push_back(m.data);
    opt.second_moments().push_back(v.data);
  }
}

void RequireTrainingBatch(const Tensor<float>& x, const model::CodecConfig& c) {
  if (x.n() < 1 || x.c() != c.encoder.in_channels ||
      x.h() != c.spectral.n_mels) {
    Fail(ErrorClass::kShape,
         "training batch has shape " + nn::ShapeString(x.shape()));
  }
}

}  // namespace

void EmaCurves::Update(const LossBreakdown& b, double decay) {
  if (!initialized) {
    value = b;
    initialized = true;
    return;
  }
  auto mix = [decay](double& acc, double v) { acc = decay * acc + (1 - decay) * v; };
  mix(value.l_sr, b.l_sr);
  mix(value.l_disc, b.l_disc);
  mix(value.l_adv, b.l_adv);
  mix(value.l_fm, b.l_fm);
  mix(value.l_cm, b.l_cm);
  mix(value.total, b.total);
  mix(value.generator, b.generator);
}

GridDataset::GridDataset(std::vector<dsp::Grid> grids) : grids_(std::move(grids)) {
  for (const auto& g : grids_) {
    if (g.rows() != grids_.front().rows() || g.cols() != grids_.front().cols()) {
      Fail(ErrorClass::kShape, "grid dataset items differ in shape");
    }
  }
}

Tensor<float> GridDataset::SampleBatch(int batch, std::mt19937_64& rng) const {
  if (grids_.empty()) Fail(ErrorClass::kConfig, "empty dataset");
  const auto& first = grids_.front();
  Tensor<float> out(batch, 1, static_cast<int>(first.rows()),
                    static_cast<int>(first.cols()));
  std::uniform_int_distribution<std::size_t> pick(0, grids_.size() - 1);
  for (int n = 0; n < batch; ++n) {
    const dsp::Grid& g = grids_[pick(rng)];
    std::transform(g.data(), g.data() + g.size(), out.sample(n),
                   [](double v) { return static_cast<float>(v); });
  }
  return out;
}

ClipDataset::ClipDataset(std::vector<dsp::AudioClip> clips,
                         const dsp::SpectralConfig& cfg, int crop_samples)
    : clips_(std::move(clips)), cfg_(cfg), crop_(crop_samples) {
  if (crop_ < cfg.win_length) {
    Fail(ErrorClass::kConfig, "crop_samples is shorter than one window");
  }
}

Tensor<float> ClipDataset::SampleBatch(int batch, std::mt19937_64& rng) const {
  if (clips_.empty()) Fail(ErrorClass::kConfig, "empty dataset");
  const int frames = dsp::NumFrames(static_cast<std::size_t>(crop_), cfg_.hop);
  Tensor<float> out(batch, 1, cfg_.n_mels, frames);
  std::uniform_int_distribution<std::size_t> pick(0, clips_.size() - 1);
  for (int n = 0; n < batch; ++n) {
    const dsp::AudioClip& clip = clips_[pick(rng)];
    dsp::AudioClip crop;
    crop.sample_rate = clip.sample_rate;
    crop.samples.assign(crop_, 0.0);
    std::size_t offset = 0;
    if (clip.size() > static_cast<std::size_t>(crop_)) {
      std::uniform_int_distribution<std::size_t> off(0, clip.size() - crop_);
      offset = off(rng);
    }
    const std::size_t len = std::min<std::size_t>(crop_, clip.size() - offset);
    std::copy_n(clip.samples.begin() + offset, len, crop.samples.begin());
    const dsp::MelSpectrogram mel = dsp::ComputeMelSpectrogram(crop, cfg_);
    std::transform(mel.values.data(), mel.values.data() + mel.values.size(),
                   out.sample(n), [](double v) { return static_cast<float>(v); });
  }
  return out;
}

std::unique_ptr<ClipDataset> LoadClipDataset(const std::filesystem::path& dir,
                                             const model::CodecConfig& codec,
                                             const TrainConfig& cfg,
                                             std::vector<std::string>* dropped) {
  std::vector<dsp::AudioClip> clips;
  for (const std::filesystem::path& p : dsp::ListAudioFiles(dir)) {
    try {
      dsp::AudioClip clip = dsp::LoadAudio(p, codec.spectral.sample_rate);
      if (cfg.filter_bandwidth &&
          codec.spectral.sample_rate == dsp::kTrainingSampleRate &&
          !dsp::FilterTrainingClip(clip, cfg.bandwidth_threshold_db)) {
        if (dropped) dropped->push_back(p.string() + ": below native bandwidth");
        continue;
      }
      clips.push_back(std::move(clip));
    } catch (const Error& e) {
      if (dropped) dropped->push_back(p.string() + ": " + e.what());
    }
  }
  return std::make_unique<ClipDataset>(std::move(clips), codec.spectral,
                                       cfg.crop_samples);
}

Trainer::Trainer(const model::CodecConfig& codec, const TrainConfig& cfg)
    : codec_cfg_(codec), cfg_(cfg), gen_opt_(cfg.adam), disc_opt_(cfg.adam) {
  codec.Validate();
  cfg.Validate();
  const SeedPlan seeds(cfg.seed);
  model_ = model::CodecModel<float>(codec, seeds.model);
  std::mt19937_64 cb_rng(seeds.codebook);
  codebook_ = quant::Codebook<float>(codec.quantizer.codebook_size,
                                     codec.encoder.LatentChannels(), cb_rng);
  std::mt19937_64 d_rng(seeds.discriminator);
  DiscriminatorConfig dc = cfg.disc;
  dc.in_channels = codec.decoder.out_channels;
  disc_ = Discriminator<float>(dc, d_rng);
  rng_.seed(seeds.data);
}

void Trainer::SetFlattenOrder(model::FlattenOrder order) {
  codec_cfg_.quantizer.order = order;
}

nn::ParameterList<float> Trainer::GeneratorParameters() {
  nn::ParameterList<float> p = model_.Parameters();
  codebook_.CollectParameters(p);
  return p;
}

nn::ParameterList<float> Trainer::DiscriminatorParameters() {
  return disc_.Parameters();
}

LossBreakdown Trainer::Evaluate(const Tensor<float>& x,
                                Tensor<float>* reconstruction) const {
  RequireTrainingBatch(x, codec_cfg_);
  const Tensor<float> z = model_.encoder().Forward(x, nullptr);
  const quant::QuantizeResult<float> q =
      quant::Quantize(z, codebook_, codec_cfg_.quantizer.order);
  Tensor<float> x_hat = model_.decoder().Forward(q.quantized, nullptr);
  const LossWeights& w = cfg_.weights;
  const double l_sr = cfg_.use_subband ? SubbandReconLoss(x, x_hat, w)
                                       : FullReconLoss(x, x_hat);
  double l_disc = 0, l_adv = 0, l_fm = 0;
  if (cfg_.use_discriminator) {
    const auto real = disc_.Forward(x, nullptr);
    const auto fake = disc_.Forward(x_hat, nullptr);
    const auto terms = AdversarialLosses(real.logits, fake.logits);
    l_disc = terms.l_disc;
    l_adv = terms.l_adv;
    l_fm = FeatureMatchingLoss(real.features, fake.features);
  }
  if (reconstruction) *reconstruction = std::move(x_hat);
  return ComposeObjective(l_sr, l_disc, l_adv, l_fm, q.commitment_loss, w);
}

StepRecord Trainer::Step(const Tensor<float>& x) {
  RequireTrainingBatch(x, codec_cfg_);
  const double lr = CurrentLr();
  const LossWeights& w = cfg_.weights;

  model::Encoder<float>::Trace enc_trace;
  model::Decoder<float>::Trace dec_trace;
  const Tensor<float> z = model_.encoder().Forward(x, &enc_trace);
  const quant::QuantizeResult<float> q =
      quant::Quantize(z, codebook_, codec_cfg_.quantizer.order);
  const Tensor<float> x_hat = model_.decoder().Forward(q.quantized, &dec_trace);

  double l_disc = 0, l_adv = 0, l_fm = 0;
  Tensor<float> dx_hat(x_hat.shape());
  if (cfg_.use_discriminator) {
    const nn::ParameterList<float> dparams = DiscriminatorParameters();
    ZeroGrads(dparams);
    Discriminator<float>::Trace real_trace, fake_trace;
    const auto real = disc_.Forward(x, &real_trace);
    const auto fake = disc_.Forward(x_hat, &fake_trace);
    l_disc = AdversarialLosses(real.logits, fake.logits).l_disc;
    if (!std::isfinite(l_disc)) {
      Fail(ErrorClass::kNumeric, "non-finite discriminator loss at step " +
                                     std::to_string(step_ + 1) +
                                     ": l_disc=" + std::to_string(l_disc));
    }
    Tensor<float> d_real, d_fake;
    DiscriminatorLossGrad(real.logits, fake.logits, &d_real, &d_fake);
    Scale(d_real, static_cast<float>(w.lambda_disc));
    Scale(d_fake, static_cast<float>(w.lambda_disc));
    disc_.Backward(real_trace, d_real, nullptr);
    disc_.Backward(fake_trace, d_fake, nullptr);
    disc_opt_.Step(dparams, lr);

    const auto real2 = disc_.Forward(x, nullptr);
    Discriminator<float>::Trace gen_trace;
    const auto fake2 = disc_.Forward(x_hat, &gen_trace);
    l_adv = AdversarialLosses(real2.logits, fake2.logits).l_adv;
    std::vector<Tensor<float>> d_feat;
    l_fm = FeatureMatchingLoss(real2.features, fake2.features, &d_feat);
    Tensor<float> d_logits = GeneratorAdvGrad(fake2.logits);
    Scale(d_logits, static_cast<float>(w.lambda_adv));
    for (auto& f : d_feat) Scale(f, static_cast<float>(w.lambda_fm));
    dx_hat = disc_.Backward(gen_trace, d_logits, &d_feat);
  }

  Tensor<float> d_sr;
  const double l_sr = cfg_.use_subband ? SubbandReconLoss(x, x_hat, w, &d_sr)
                                       : FullReconLoss(x, x_hat, &d_sr);
  Scale(d_sr, static_cast<float>(w.lambda_sr));
  nn::AddInPlace(dx_hat, d_sr);

  StepRecord rec;
  rec.losses = ComposeObjective(l_sr, l_disc, l_adv, l_fm, q.commitment_loss, w);
  if (!Finite(rec.losses)) {
    Fail(ErrorClass::kNumeric, "non-finite loss at step " +
                                   std::to_string(step_ + 1) + ": " +
                                   rec.losses.ToString());
  }

  const nn::ParameterList<float> gparams = GeneratorParameters();
  ZeroGrads(gparams);
  const Tensor<float> dq = model_.decoder().Backward(dec_trace, dx_hat);
  Tensor<float> dz = quant::StraightThroughBackward(dq);
  nn::AddInPlace(dz, quant::CommitmentBackward(
                         z, q, codebook_, static_cast<float>(w.lambda_cm)));
  model_.encoder().Backward(enc_trace, dz, false);
  gen_opt_.Step(gparams, lr);

  ++step_;
  ema_.Update(rec.losses, cfg_.ema_decay);
  rec.step = step_;
  rec.lr = lr;
  rec.utilization = q.stats.utilization;
  rec.perplexity = q.stats.perplexity;
  return rec;
}

void Trainer::Save(const std::filesystem::path& path) {
  CheckpointFile f;
  std::ostringstream rng_state;
  rng_state << rng_;
  json history = json::array();
  for (const auto& [s, b] : ema_history_) {
    json e = BreakdownJson(b);
    e["step"] = s;
    history.push_back(e);
  }
  const json meta = {
      {"format", "usrc-checkpoint"},
      {"fingerprint", codec_cfg_.FingerprintHex()},
      {"codec", json::parse(CodecConfigToJson(codec_cfg_))},
      {"train", TrainConfigJson(cfg_)},
      {"step", step_},
      {"rng", rng_state.str()},
      {"ema", {{"initialized", ema_.initialized}, {"value", BreakdownJson(ema_.value)}}},
      {"ema_history", history},
      {"gen_opt_steps", gen_opt_.steps()},
      {"disc_opt_steps", disc_opt_.steps()}};
  f.meta_json = meta.dump();
  const nn::ParameterList<float> gparams = GeneratorParameters();
  const nn::ParameterList<float> dparams = DiscriminatorParameters();
  AppendParameters(gparams, f.tensors);
  f.tensors.push_back({"quantizer.base", {1, 1, codebook_.size(), codebook_.dim()},
                       std::vector<float>(codebook_.base().data(),
                                          codebook_.base().data() +
                                              codebook_.base().size())});
  AppendParameters(dparams, f.tensors);
  AppendMoments("adam.gen", gen_opt_, gparams, f.tensors);
  AppendMoments("adam.disc", disc_opt_, dparams, f.tensors);
  WriteCheckpointFile(path, f);
}

std::unique_ptr<Trainer> Trainer::Load(const std::filesystem::path& path) {
  const CheckpointFile f = ReadCheckpointFile(path);
  try {
    const json meta = json::parse(f.meta_json);
    const model::CodecConfig codec = CodecConfigFromJson(meta.at("codec").dump());
    if (meta.at("fingerprint").get<std::string>() != codec.FingerprintHex()) {
      Fail(ErrorClass::kCheckpoint, path.string() + ": fingerprint mismatch");
    }
    const TrainConfig cfg = TrainConfigFromJson(meta.at("train"));
    auto t = std::make_unique<Trainer>(codec, cfg);
    const nn::ParameterList<float> gparams = t->GeneratorParameters();
    const nn::ParameterList<float> dparams = t->DiscriminatorParameters();
    LoadParameters(f, gparams);
    LoadCodebookBase(f, t->codebook_);
    LoadParameters(f, dparams);
    t->gen_opt_.set_steps(meta.at("gen_opt_steps"));
    t->disc_opt_.set_steps(meta.at("disc_opt_steps"));
    LoadMoments("adam.gen", f, t->gen_opt_, gparams);
    LoadMoments("adam.disc", f, t->disc_opt_, dparams);
    t->step_ = meta.at("step");
    std::istringstream rng_state(meta.at("rng").get<std::string>());
    rng_state >> t->rng_;
    if (!rng_state) Fail(ErrorClass::kCheckpoint, "bad RNG state");
    t->ema_.initialized = meta.at("ema").at("initialized");
    t->ema_.value = BreakdownFromJson(meta.at("ema").at("value"));
    for (const json& e : meta.at("ema_history")) {
      t->ema_history_.emplace_back(e.at("step").get<long long>(),
                                   BreakdownFromJson(e));
    }
    return t;
  } catch (const json::exception& ex) {
    Fail(ErrorClass::kCheckpoint, path.string() + ": bad metadata: " + ex.what());
  }
}

std::filesystem::path CheckpointPath(const std::filesystem::path& dir,
                                     long long step) {
  char name[32];
  std::snprintf(name, sizeof(name), "step_%08lld.ckpt", step);
  return dir / name;
}

std::vector<std::filesystem::path> TrainLoop(const MelDataset& data,
                                             const model::CodecConfig& codec,
                                             const TrainConfig& cfg,
                                             const TrainLoopOptions& opt) {
  if (data.size() == 0) {
    Fail(ErrorClass::kConfig, "training dataset is empty");
  }
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  if (ec) Fail(ErrorClass::kIo, opt.out_dir.string() + ": " + ec.message());

  std::unique_ptr<Trainer> t;
  std::vector<std::filesystem::path> written;
  if (!opt.resume_from.empty()) {
    t = Trainer::Load(opt.resume_from);
  } else {
    t = std::make_unique<Trainer>(codec, cfg);
    t->RecordEmaSnapshot();
    written.push_back(CheckpointPath(opt.out_dir, 0));
    t->Save(written.back());
  }
  const long long total = opt.total_steps >= 0 ? opt.total_steps : cfg.total_steps;
  std::ofstream log(opt.out_dir / "metrics.jsonl", std::ios::app);
  if (!log) Fail(ErrorClass::kIo, (opt.out_dir / "metrics.jsonl").string());
  while (t->step() < total) {
    const Tensor<float> batch =
        data.SampleBatch(t->config().batch_size, t->rng());
    const StepRecord r = t->Step(batch);
    json rec = BreakdownJson(r.losses);
    rec["step"] = r.step;
    rec["lr"] = r.lr;
    rec["utilization"] = r.utilization;
    rec["perplexity"] = r.perplexity;
    log << rec.dump() << "\n";
    if (!opt.quiet && (r.step % 10 == 0 || r.step == total)) {
      std::fprintf(stderr, "step %lld %s\n", r.step, r.losses.ToString().c_str());
    }
    if (r.step % t->config().checkpoint_every == 0 || r.step == total) {
      log.flush();
      t->RecordEmaSnapshot();
      written.push_back(CheckpointPath(opt.out_dir, r.step));
      t->Save(written.back());
    }
  }
  return written;
}

}  // namespace usrc::train

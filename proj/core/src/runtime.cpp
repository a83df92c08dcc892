#include "brickstage/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace brickstage {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

const Costume* find_costume(const Sprite& sprite, std::string_view id) {
  for (const Costume& c : sprite.costumes) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

}  // namespace

Session::Session(std::shared_ptr<const Project> project, std::uint64_t seed,
                 std::optional<std::int64_t> tick_rate_override)
    : project_(std::move(project)), seed_(seed), rng_(seed) {
  if (!project_) throw std::invalid_argument("session needs a project");
  if (const auto violations = validate(*project_); !violations.empty()) {
    throw std::invalid_argument("invalid project: " + violations.front().path + ": " +
                                violations.front().message);
  }
  tick_rate_ = tick_rate_override.value_or(project_->stage.tick_rate);
  if (tick_rate_ < 1 || tick_rate_ > kMaxTickRate) {
    throw std::invalid_argument("tick rate must be in [1, 240]");
  }

  sprites_.resize(project_->sprites.size());
  for (std::size_t i = 0; i < sprites_.size(); ++i) {
    sprites_[i].layer = static_cast<std::int64_t>(i);
    sprites_[i].sprite_index = i;
  }
  for (std::size_t s = 0; s < project_->sprites.size(); ++s) {
    const auto& scripts = project_->sprites[s].scripts;
    for (std::size_t k = 0; k < scripts.size(); ++k) {
      if (std::holds_alternative<WhenProgramStarts>(scripts[k].trigger)) start_script(s, k);
    }
  }
}

std::int64_t Session::duration_ticks(std::int64_t millis) const {
  const std::int64_t ticks = (millis * tick_rate_ + 999) / 1000;
  return std::max<std::int64_t>(1, ticks);
}

void Session::inject(const EventIn& event) {
  if (stopped_) return;
  if (const auto* tap = std::get_if<Tap>(&event);
      tap != nullptr && (!std::isfinite(tap->x) || !std::isfinite(tap->y))) {
    throw std::invalid_argument("tap coordinates must be finite");
  }
  pending_.push_back(event);
}

std::int64_t Session::next_random_int(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw std::invalid_argument("next_random_int: lo > hi");
  const std::uint64_t output = rng_.next();
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  const std::uint64_t offset = span == 0 ? output : output % span;
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + offset);
}

ScriptInstance* Session::find_instance(std::uint64_t id) {
  for (auto& inst : instances_) {
    if (inst.id == id) return &inst;
  }
  return nullptr;
}

void Session::start_script(std::size_t sprite_index, std::size_t script_index) {
  const Script& script = project_->sprites[sprite_index].scripts[script_index];
  idle_reported_ = false;

  ScriptInstance* inst = nullptr;
  for (auto& candidate : instances_) {
    if (candidate.live() && candidate.sprite_index == sprite_index &&
        candidate.script_index == script_index) {
      inst = &candidate;
      break;
    }
  }
  if (inst == nullptr) {
    instances_.push_back(ScriptInstance{});
    inst = &instances_.back();
    inst->id = next_instance_id_++;
    inst->sprite_index = sprite_index;
    inst->script_index = script_index;
  } else {
    ++inst->generation;
  }
  inst->frames.assign(1, Frame{&script.bricks, 0, 0, false});
  inst->status = status::Runnable{};

  if (running_) {
    const auto later = run_queue_.begin() + static_cast<std::ptrdiff_t>(queue_pos_ + 1);
    if (std::find(later, run_queue_.end(), inst->id) == run_queue_.end()) run_queue_.push_back(inst->id);
  }
}

std::vector<std::uint64_t> Session::broadcast(const std::string& message) {
  std::vector<std::uint64_t> started;
  for (std::size_t s = 0; s < project_->sprites.size(); ++s) {
    const auto& scripts = project_->sprites[s].scripts;
    for (std::size_t k = 0; k < scripts.size(); ++k) {
      const auto* receive = std::get_if<WhenIReceive>(&scripts[k].trigger);
      if (receive == nullptr || receive->message != message) continue;
      start_script(s, k);
      for (const auto& inst : instances_) {
        if (inst.live() && inst.sprite_index == s && inst.script_index == k) started.push_back(inst.id);
      }
    }
  }
  return started;
}

TickOutputs Session::step() {
  if (stopped_) throw std::logic_error("step on a stopped session");
  TickOutputs out;
  out.tick = tick_;

  const Scene before = scene();
  bool stop_requested = false;
  std::vector<EventIn> events;
  events.swap(pending_);
  for (const EventIn& event : events) {
    if (std::holds_alternative<Stop>(event)) {
      stop_requested = true;
      continue;
    }
    const Tap& tap = std::get<Tap>(event);
    const auto hit = hit_test(before, *project_, tap.x, tap.y);
    if (!hit) continue;
    for (std::size_t s = 0; s < project_->sprites.size(); ++s) {
      if (project_->sprites[s].name != *hit) continue;
      const auto& scripts = project_->sprites[s].scripts;
      for (std::size_t k = 0; k < scripts.size(); ++k) {
        if (std::holds_alternative<WhenTapped>(scripts[k].trigger)) start_script(s, k);
      }
    }
  }

  if (stop_requested) {
    instances_.clear();
    out.emitted.emplace_back(output::ProgramEnded{});
    stopped_ = true;
    ++tick_;
    return out;
  }

  run_queue_.clear();
  for (auto& inst : instances_) {
    inst.bricks_this_tick = 0;
    inst.budget_reported = false;
    if (inst.live()) run_queue_.push_back(inst.id);
  }
  running_ = true;
  for (queue_pos_ = 0; queue_pos_ < run_queue_.size(); ++queue_pos_) {
    if (ScriptInstance* inst = find_instance(run_queue_[queue_pos_])) run_instance(*inst, out);
  }
  running_ = false;
  run_queue_.clear();

  std::erase_if(instances_, [](const ScriptInstance& inst) { return !inst.live(); });
  if (instances_.empty() && !idle_reported_) {
    out.emitted.emplace_back(output::ProgramEnded{});
    idle_reported_ = true;
  }
  ++tick_;
  return out;
}

void Session::glide_step(ScriptInstance& inst) {
  auto& glide = std::get<status::Gliding>(inst.status);
  SpriteState& sprite = sprites_[inst.sprite_index];
  if (tick_ >= glide.end_tick) {
    sprite.x = glide.target_x;
    sprite.y = glide.target_y;
    inst.status = status::Runnable{};
    return;
  }
  const double elapsed = static_cast<double>(tick_ - glide.start_tick + 1);
  const double duration = static_cast<double>(glide.end_tick - glide.start_tick + 1);
  sprite.x = glide.start_x + (glide.target_x - glide.start_x) * elapsed / duration;
  sprite.y = glide.start_y + (glide.target_y - glide.start_y) * elapsed / duration;
}

void Session::run_instance(ScriptInstance& inst, TickOutputs& out) {
  if (auto* sleeping = std::get_if<status::Sleeping>(&inst.status)) {
    if (tick_ < sleeping->until_tick) return;
    inst.status = status::Runnable{};
  } else if (std::holds_alternative<status::Gliding>(inst.status)) {
    glide_step(inst);
    return;
  } else if (auto* waiting = std::get_if<status::WaitingOnBroadcast>(&inst.status)) {
    for (std::uint64_t id : waiting->instance_ids) {
      const ScriptInstance* receiver = find_instance(id);
      if (receiver != nullptr && receiver->live()) return;
    }
    inst.status = status::Runnable{};
  } else if (!inst.live()) {
    return;
  }

  for (;;) {
    if (inst.frames.empty()) {
      inst.status = status::Done{};
      return;
    }
    Frame& frame = inst.frames.back();
    if (frame.position == frame.bricks->size()) {
      if (inst.frames.size() == 1) {
        inst.frames.clear();
        inst.status = status::Done{};
        return;
      }
      // End of a loop iteration always yields. Re-entering the loop counts as
      // executing the loop brick again, so an empty body still does work.
      ++inst.bricks_this_tick;
      if (frame.forever || --frame.remaining > 0) {
        frame.position = 0;
      } else {
        inst.frames.pop_back();
      }
      return;
    }
    if (inst.bricks_this_tick >= kBrickBudgetPerTick) {
      if (!inst.budget_reported) {
        inst.budget_reported = true;
        out.diagnostics.push_back(Diagnostic{tick_, project_->sprites[inst.sprite_index].name,
                                             inst.script_index, "BudgetExceeded"});
      }
      return;
    }
    const Brick& brick = (*frame.bricks)[frame.position++];
    ++inst.bricks_this_tick;
    const std::uint64_t generation = inst.generation;
    const Flow flow = execute(inst, brick, out);
    if (inst.generation != generation) return;  // restarted by its own broadcast; requeued
    if (flow == Flow::Yield) return;
  }
}

Session::Flow Session::execute(ScriptInstance& inst, const Brick& brick, TickOutputs& out) {
  SpriteState& state = sprites_[inst.sprite_index];
  const Sprite& sprite = project_->sprites[inst.sprite_index];

  return std::visit(
      Overloaded{
          [&](const bricks::Wait& b) {
            inst.status = status::Sleeping{tick_ + duration_ticks(b.millis)};
            return Flow::Yield;
          },
          [&](const bricks::Broadcast& b) {
            out.emitted.emplace_back(output::BroadcastSent{b.message});
            broadcast(b.message);
            return Flow::Continue;
          },
          [&](const bricks::BroadcastAndWait& b) {
            out.emitted.emplace_back(output::BroadcastSent{b.message});
            const std::uint64_t generation = inst.generation;
            auto started = broadcast(b.message);
            if (inst.generation != generation) return Flow::Yield;
            if (started.empty()) return Flow::Continue;
            inst.status = status::WaitingOnBroadcast{std::move(started)};
            return Flow::Yield;
          },
          [&](const bricks::PlaceAt& b) {
            state.x = static_cast<double>(b.x);
            state.y = static_cast<double>(b.y);
            return Flow::Continue;
          },
          [&](const bricks::GlideTo& b) {
            inst.status = status::Gliding{state.x,
                                          state.y,
                                          static_cast<double>(b.x),
                                          static_cast<double>(b.y),
                                          tick_,
                                          tick_ + duration_ticks(b.millis) - 1};
            glide_step(inst);
            return Flow::Yield;
          },
          [&](const bricks::ChangeXBy& b) {
            state.x += static_cast<double>(b.dx);
            return Flow::Continue;
          },
          [&](const bricks::ChangeYBy& b) {
            state.y += static_cast<double>(b.dy);
            return Flow::Continue;
          },
          [&](const bricks::PlaceAtRandom& b) {
            const std::int64_t x = next_random_int(b.xmin, b.xmax);
            const std::int64_t y = next_random_int(b.ymin, b.ymax);
            state.x = static_cast<double>(x);
            state.y = static_cast<double>(y);
            return Flow::Continue;
          },
          [&](const bricks::SetCostume& b) {
            for (std::size_t i = 0; i < sprite.costumes.size(); ++i) {
              if (sprite.costumes[i].id == b.costume) state.costume_index = i;
            }
            return Flow::Continue;
          },
          [&](const bricks::NextCostume&) {
            if (!sprite.costumes.empty()) state.costume_index = (state.costume_index + 1) % sprite.costumes.size();
            return Flow::Continue;
          },
          [&](const bricks::Show&) {
            state.visible = true;
            return Flow::Continue;
          },
          [&](const bricks::Hide&) {
            state.visible = false;
            return Flow::Continue;
          },
          [&](const bricks::SetSize& b) {
            state.size_percent = b.percent;
            return Flow::Continue;
          },
          [&](const bricks::ComeToFront&) {
            std::int64_t top = state.layer;
            for (const SpriteState& other : sprites_) top = std::max(top, other.layer);
            state.layer = top + 1;
            return Flow::Continue;
          },
          [&](const bricks::PlaySound& b) {
            out.emitted.emplace_back(output::SoundStart{sprite.name, b.sound});
            return Flow::Continue;
          },
          [&](const bricks::Speak& b) {
            out.emitted.emplace_back(output::Speak{sprite.name, b.text});
            return Flow::Continue;
          },
          [&](const bricks::Repeat& b) {
            if (b.count > 0) inst.frames.push_back(Frame{&b.body, 0, b.count, false});
            return Flow::Continue;
          },
          [&](const bricks::Forever& b) {
            inst.frames.push_back(Frame{&b.body, 0, 0, true});
            return Flow::Continue;
          },
      },
      brick.op);
}

Scene Session::scene() const {
  Scene scene;
  scene.tick = tick_ == 0 ? 0 : tick_ - 1;
  std::vector<const SpriteState*> order;
  order.reserve(sprites_.size());
  for (const SpriteState& s : sprites_) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const SpriteState* a, const SpriteState* b) {
    if (a->layer != b->layer) return a->layer < b->layer;
    return a->sprite_index < b->sprite_index;
  });
  for (const SpriteState* s : order) {
    const Sprite& sprite = project_->sprites[s->sprite_index];
    scene.entries.push_back(SceneEntry{sprite.name, s->x, s->y, s->visible, s->size_percent, s->layer,
                                       sprite.costumes.empty() ? std::string()
                                                               : sprite.costumes[s->costume_index].id});
  }
  return scene;
}

std::optional<std::string> hit_test(const Scene& scene, const Project& project, double x, double y) {
  for (auto it = scene.entries.rbegin(); it != scene.entries.rend(); ++it) {
    if (!it->visible || it->costume_id.empty()) continue;
    const Sprite* sprite = nullptr;
    for (const Sprite& s : project.sprites) {
      if (s.name == it->sprite_name) sprite = &s;
    }
    if (sprite == nullptr) continue;
    const Costume* costume = find_costume(*sprite, it->costume_id);
    if (costume == nullptr) continue;
    const double scale = static_cast<double>(it->size_percent) / 200.0;
    const double half_w = static_cast<double>(costume->width) * scale;
    const double half_h = static_cast<double>(costume->height) * scale;
    if (x >= it->x - half_w && x <= it->x + half_w && y >= it->y - half_h && y <= it->y + half_h) {
      return it->sprite_name;
    }
  }
  return std::nullopt;
}

}  // namespace brickstage

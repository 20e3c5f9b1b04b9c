#pragma once

// Event-driven model construction shared by the streaming readers and the
// DOM baseline. Elements are created as soon as their key is known; a
// reference to an element not seen yet creates an "unborn" placeholder at the
// addressed position, which the element adopts when it appears.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "kmf/error.hpp"
#include "model_internal.hpp"

namespace kmf::detail {

struct SourcePos {
  std::uint64_t offset = 0;
  std::uint64_t line = 1;
};

class ModelBuilder {
 public:
  ModelBuilder(std::shared_ptr<const DispatchTable> table, const SourcePos& pos);

  [[noreturn]] void fail(ErrorKind kind, const std::string& detail) const;

  void check_metamodel(std::string_view name) const;
  const DispatchTable& table() const noexcept { return *table_; }
  bool has_root() const noexcept { return root_seen_; }
  std::size_t depth() const noexcept { return depth_; }

  void begin_root(std::string_view class_name);
  /// Containment child of the current element; an empty class name means the
  /// declared target class.
  void begin_child(SlotIndex slot, std::string_view class_name);
  void end();

  const ClassLayout& current_class() const noexcept { return *frames_[depth_ - 1].cls; }
  /// Slot of a feature of the current element. Throws unknown_feature.
  SlotIndex feature(std::string_view name) const;

  void set_key(std::string_view text);
  void attribute_text(SlotIndex slot, std::string_view text);
  void attribute_string(SlotIndex slot, std::string_view text);
  void attribute_number(SlotIndex slot, std::string_view number);
  void attribute_bool(SlotIndex slot, bool value);
  void reference(SlotIndex slot, std::string_view path);

  Model finish();

 private:
  struct Frame {
    const ClassLayout* cls = nullptr;
    Element* e = nullptr;
    SlotIndex slot = kNoSlot;
    bool has_key = false;
    std::uint32_t key = 0;
    std::vector<Slot> values;
    std::vector<std::uint8_t> set;
  };
  struct Deferred {
    Element* holder;
    SlotIndex slot;
    std::size_t position;
    std::string path;
  };

  Frame& top() noexcept { return frames_[depth_ - 1]; }
  Frame& push(const ClassLayout& cls, SlotIndex slot);
  void store_value(SlotIndex slot, Slot value);
  Element* materialize();
  Element* adopt(Element* placeholder, const ClassLayout& cls);
  Element* placeholder(Element* parent, SlotIndex slot, const InternedString* key);
  const InternedString* intern_key(std::string_view text);
  // nullptr when the path needs the post-pass.
  Element* resolve(std::string_view path);
  std::string placeholder_path(const Element* e) const;
  static std::string_view key_text_of(const ClassLayout& cls, const std::vector<Slot>& values, char (&buf)[24]);
  void index_references();

  std::shared_ptr<const DispatchTable> table_;
  const SourcePos& pos_;
  Model model_;
  std::vector<Frame> frames_;
  std::size_t depth_ = 0;
  bool root_seen_ = false;
  std::size_t unborn_ = 0;
  PtrMap<const Element*, const InternedString*> single_keys_;
  std::vector<Deferred> deferred_;
  std::string rel_buf_;
  std::string key_buf_;
};

}  // namespace kmf::detail

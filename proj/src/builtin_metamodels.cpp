#include "kmf/error.hpp"
#include "kmf/metamodel.hpp"

namespace kmf {
namespace {

// Keep in sync with metamodels/*.mm; a unit test compares them.
constexpr std::string_view kFsm = R"mm(# Flat finite state machine: states own their outgoing transitions, each
# transition may own one action.
metamodel fsm

class FSM {
  attr name : string
  ref ownedState : State [0..*] containment
  ref initialState : State [0..1]
  ref finalState : State [0..1]
  ref currentState : State [0..1]
}

class State {
  attr name : string id
  ref outgoingTransition : Transition [0..*] containment
  ref incomingTransition : Transition [0..*] opposite target
}

class Transition {
  attr input : string
  attr output : string
  ref source : State [0..1]
  ref target : State [0..1] opposite incomingTransition
  ref action : Action [0..1] containment
}

class Action {
  attr name : string
}
)mm";

constexpr std::string_view kCloud = R"mm(# Cloud topology: nodes host other nodes and component instances. Node names
# are ids; plain instances carry no id and are keyed automatically.
metamodel cloud

class ContainerRoot {
  ref nodes : ContainerNode [0..*] containment
}

class NamedElement {
  attr name : string id
}

class ContainerNode : NamedElement {
  attr cpu : int
  attr memory : int
  ref hosts : ContainerNode [0..*] containment
  ref components : Instance [0..*] containment
}

class Instance {
  attr typeName : string
  attr started : bool
  attr load : float
  ref dependsOn : Instance [0..*]
}

class ComponentInstance : Instance {
  attr name : string id
}
)mm";

}  // namespace

std::string_view builtin_fsm_text() noexcept { return kFsm; }
std::string_view builtin_cloud_text() noexcept { return kCloud; }

Metamodel builtin_fsm_metamodel() { return parse_metamodel(kFsm); }
Metamodel builtin_cloud_metamodel() { return parse_metamodel(kCloud); }

std::optional<Metamodel> builtin_metamodel(std::string_view name) {
  if (name == "fsm") return builtin_fsm_metamodel();
  if (name == "cloud") return builtin_cloud_metamodel();
  return std::nullopt;
}

}  // namespace kmf

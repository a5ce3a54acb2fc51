#pragma once

#include <string_view>

#include "psguard/ast.hpp"

namespace psguard {

/// Parses a practical subset of PowerShell into a ScriptRoot tree.
///
/// Never throws on malformed input. A statement that matches no grammar rule
/// is wrapped in an ErrorAst (one ArgumentAst leaf per raw lexeme) and
/// parsing resumes after the next `;` or newline. Every node satisfies
/// `node.text == source.substr(node.span.start, node.span.size())` and child
/// spans lie inside their parent's span.
///
/// Statement layout: each statement becomes a PipelineAst holding its
/// elements (CommandAst, CommandExpressionAst, AssignmentAst, IfAst, LoopAst,
/// FunctionDefinitionAst). Commands are CommandAst{CmdletAst head,
/// CommandParameterAst/ArgumentAst...}. Expression arguments are wrapped:
/// ArgumentAst{StringLiteralAst}, ArgumentAst{MethodInvocationAst}, etc.
[[nodiscard]] AstNode parse(std::string_view source);
[[nodiscard]] inline AstNode parse(const SourceScript& script) { return parse(script.text); }

/// Maximum bracket/block nesting accepted before a region is treated as an error.
inline constexpr int kMaxNestingDepth = 200;

}  // namespace psguard

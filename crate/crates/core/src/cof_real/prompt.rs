use super::VideoAnnotation;

/// Instruction block sent ahead of the frame captions.
pub const INSTRUCTION: &str = "\
Ask a question based on the narrative that is provided for a video. The questions should be answerable from the video description.
Start reasoning step-by-step like this:
Point out key elements from the video relevant to the question.
Break down the reasoning from those elements to the answer.
Include specific frame numbers as references to support your reasoning.
Answer clearly.
**Question**:
**Reasoning**:
**Answer**:";

/// Instruction block, a blank line, then one `Frame <id>: <caption>` line
/// per caption. The annotation must already be aligned.
pub fn build_prompt(annotation: &VideoAnnotation) -> String {
    build_prompt_with(INSTRUCTION, annotation)
}

pub fn build_prompt_with(instruction: &str, annotation: &VideoAnnotation) -> String {
    let mut out = String::with_capacity(instruction.len() + 64 * annotation.captions.len());
    out.push_str(instruction);
    out.push_str("\n\n");
    let lines: Vec<String> = annotation
        .captions
        .iter()
        .map(|c| format!("Frame {}: {}", c.frame_id, c.caption))
        .collect();
    out.push_str(&lines.join("\n"));
    out
}

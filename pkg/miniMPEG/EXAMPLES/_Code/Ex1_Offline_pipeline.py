"""
The agent answers "How can I rotate a video by 90 degrees?" without any model server: the documentation is three short
texts, the embeddings come from the mock (character trigram) embedder and the model is scripted. The query runs in the
three modes; the number of model calls grows from 1 (Base) to 2 (RagOnly) to 4 (Full, the review asks for one
revision).
"""


from miniMPEG.EXAMPLES import comment
from miniMPEG.Agent.ChatClient import ScriptedChatClient
from miniMPEG.Agent.Pipeline import AgentConfig, Mode, run_pipeline
from miniMPEG.Corpus.Document import ChunkConfig, SourceDocument, ToolTag
from miniMPEG.Corpus.Splitter import split_document
from miniMPEG.Retrieval.Embedding import MockEmbeddingProvider
from miniMPEG.Retrieval.VectorStore import StoreSet

documents = [
    SourceDocument('ffmpeg/filters.txt', 'transpose\n\nTranspose rows with columns in the input video. '
                                         'The dir option can be cclock, clock, cclock_flip or clock_flip.',
                   ToolTag.FFMPEG),
    SourceDocument('ffmpeg/main.txt', 'ffmpeg reads from an arbitrary number of input files, specified by the -i '
                                      'option, and writes to an arbitrary number of output files.', ToolTag.FFMPEG),
    SourceDocument('vvenc/usage.txt', 'vvencapp --preset medium -i input.yuv -s 1920x1080 -o output.266 encodes a '
                                      'raw YUV file to VVC.', ToolTag.VVENC),
]

comment('1. The documents are split into chunks (small ones here, so each document gives one or two chunks).')
config = ChunkConfig(chunk_size=120, overlap=20)
chunks = [chunk for document in documents for chunk in split_document(document, config)]
for chunk in chunks:
    comment(f'   {chunk.metadata.source_file} #{chunk.metadata.chunk_index}: {chunk.content[:60]!r}...', no_delay=True)

comment('\n2. The chunks are embedded and stored in two flat stores, one per tool.')
embedder = MockEmbeddingProvider(dimension=32, seed=0)
stores = StoreSet.build(chunks, embedder)
comment(f'   FFmpeg store: {len(stores[ToolTag.FFMPEG])} chunks, VVenC store: {len(stores[ToolTag.VVENC])} chunks')

answer = 'Rotate counterclockwise:\n```\nffmpeg -i input.mp4 -vf "transpose=cclock" output.mp4\n```'
script = {
    'select_tool': 'FFmpeg',
    'generate': 'ffmpeg -i input.mp4 -vf transpose output.mp4',
    'reflect': ['REVISE\nThe transpose filter needs the direction.', 'OK'],
    'revise': answer,
}

query = 'How can I rotate a video by 90 degrees?'
records = dict()
for mode in (Mode.BASE, Mode.RAG_ONLY, Mode.FULL):
    comment(f'\n3. Mode {mode.value}')
    client = ScriptedChatClient(script, model_name='scripted')
    record = run_pipeline(query, AgentConfig(i_max=1, k=2, mode=mode), client, stores, embedder)
    records[mode] = record
    comment(f'   tool: {record.tool.value}, model calls: {record.llm_calls}, stages: {", ".join(record.stages)}')
    for scored in record.retrieved:
        comment(f'   retrieved {scored.chunk.metadata.source_file} (distance {scored.distance:.3f})', no_delay=True)
    comment(f'   answer: {record.answer!r}')

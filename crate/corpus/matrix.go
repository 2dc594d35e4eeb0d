package matrix

import (
    "errors"
    "fmt"
)

type Matrix struct {
    rows, cols int
    data       []float64
}

func New(rows, cols int) *Matrix {
    return &Matrix{rows: rows, cols: cols, data: make([]float64, rows*cols)}
}

func Identity(n int) *Matrix {
    m := New(n, n)
    for i := 0; i < n; i++ {
        m.Set(i, i, 1)
    }
    return m
}

func (m *Matrix) At(i, j int) float64 {
    return m.data[i*m.cols+j]
}

func (m *Matrix) Set(i, j int, v float64) {
    m.data[i*m.cols+j] = v
}

func (m *Matrix) Mul(other *Matrix) (*Matrix, error) {
    if m.cols != other.rows {
        return nil, errors.New("dimension mismatch")
    }
    out := New(m.rows, other.cols)
    for i := 0; i < m.rows; i++ {
        for j := 0; j < other.cols; j++ {
            sum := 0.0
            for k := 0; k < m.cols; k++ {
                sum += m.At(i, k) * other.At(k, j)
            }
            out.Set(i, j, sum)
        }
    }
    return out, nil
}

func (m *Matrix) Transpose() *Matrix {
    out := New(m.cols, m.rows)
    for i := 0; i < m.rows; i++ {
        for j := 0; j < m.cols; j++ {
            out.Set(j, i, m.At(i, j))
        }
    }
    return out
}

func (m *Matrix) String() string {
    s := ""
    for i := 0; i < m.rows; i++ {
        for j := 0; j < m.cols; j++ {
            s += fmt.Sprintf("%6.2f ", m.At(i, j))
        }
        s += "\n"
    }
    return s
}
